use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::matrix::{accumulate_weight_grad, affine, input_grad, Matrix, Scalar};
use super::NnError;

const BN_EPS: f64 = 1e-5;
const BN_MOMENTUM: f64 = 0.1;

/// Shape of a fully connected network with residual blocks.
///
/// Layout: `input → hidden[0] → … → hidden[last] → res_blocks × block → output`,
/// rectifier after every hidden layer. A block of width `w` (the last hidden
/// width) computes `relu(x + dense(relu(dense(x))))`, with batch
/// normalization after each dense layer when `batch_norm` is set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetArchitecture {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub res_blocks: usize,
    pub output_dim: usize,
    #[serde(default)]
    pub batch_norm: bool,
}

impl NetArchitecture {
    /// CPU-sized default: 400 → 200 → 2 residual blocks of width 200.
    pub fn desk(input_dim: usize, output_dim: usize) -> Self {
        Self {
            input_dim,
            hidden: vec![400, 200],
            res_blocks: 2,
            output_dim,
            batch_norm: false,
        }
    }

    /// 5000 → 1000 → 4 residual blocks of width 1000.
    pub fn large(input_dim: usize, output_dim: usize) -> Self {
        Self {
            input_dim,
            hidden: vec![5000, 1000],
            res_blocks: 4,
            output_dim,
            batch_norm: false,
        }
    }

    pub fn block_width(&self) -> usize {
        self.hidden.last().copied().unwrap_or(self.input_dim)
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(NnError::InvalidArchitecture(
                "input and output dims must be at least 1".into(),
            ));
        }
        if self.hidden.contains(&0) {
            return Err(NnError::InvalidArchitecture("hidden widths must be at least 1".into()));
        }
        Ok(())
    }

    /// Flat descriptor used by the checkpoint format.
    pub fn descriptor(&self) -> Vec<u32> {
        let mut d = vec![self.input_dim as u32, self.hidden.len() as u32];
        d.extend(self.hidden.iter().map(|&h| h as u32));
        d.push(self.res_blocks as u32);
        d.push(self.output_dim as u32);
        d.push(self.batch_norm as u32);
        d
    }

    pub fn from_descriptor(d: &[u32]) -> Result<Self, NnError> {
        let bad = || NnError::Format("malformed architecture descriptor".into());
        let n_hidden = *d.get(1).ok_or_else(bad)? as usize;
        if d.len() != n_hidden + 5 {
            return Err(bad());
        }
        let arch = Self {
            input_dim: d[0] as usize,
            hidden: d[2..2 + n_hidden].iter().map(|&h| h as usize).collect(),
            res_blocks: d[2 + n_hidden] as usize,
            output_dim: d[3 + n_hidden] as usize,
            batch_norm: match d[4 + n_hidden] {
                0 => false,
                1 => true,
                _ => return Err(bad()),
            },
        };
        arch.validate()?;
        Ok(arch)
    }

    fn layout(&self) -> Layout {
        let mut values = 0;
        let mut buffers = 0;
        let mut unit = |in_dim: usize, out_dim: usize| {
            let dense = DenseSlot {
                w: values,
                b: values + in_dim * out_dim,
                in_dim,
                out_dim,
            };
            values += in_dim * out_dim + out_dim;
            let bn = self.batch_norm.then(|| {
                let slot = BnSlot {
                    gamma: values,
                    beta: values + out_dim,
                    mean: buffers,
                    var: buffers + out_dim,
                    dim: out_dim,
                };
                values += 2 * out_dim;
                buffers += 2 * out_dim;
                slot
            });
            UnitSlot { dense, bn }
        };
        let mut hidden = Vec::new();
        let mut width = self.input_dim;
        for &h in &self.hidden {
            hidden.push(unit(width, h));
            width = h;
        }
        let blocks = (0..self.res_blocks)
            .map(|_| [unit(width, width), unit(width, width)])
            .collect();
        // Output layer is plain affine: no normalization, no rectifier.
        let output = DenseSlot {
            w: values,
            b: values + width * self.output_dim,
            in_dim: width,
            out_dim: self.output_dim,
        };
        values += width * self.output_dim + self.output_dim;
        Layout {
            hidden,
            blocks,
            output,
            values,
            buffers,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct DenseSlot {
    w: usize,
    b: usize,
    in_dim: usize,
    out_dim: usize,
}

#[derive(Clone, Copy, Debug)]
struct BnSlot {
    gamma: usize,
    beta: usize,
    mean: usize,
    var: usize,
    dim: usize,
}

#[derive(Clone, Copy, Debug)]
struct UnitSlot {
    dense: DenseSlot,
    bn: Option<BnSlot>,
}

#[derive(Clone, Debug)]
struct Layout {
    hidden: Vec<UnitSlot>,
    blocks: Vec<[UnitSlot; 2]>,
    output: DenseSlot,
    values: usize,
    buffers: usize,
}

/// Network weights: trainable values in one flat vector plus the
/// batch-normalization running statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParams<T> {
    arch: NetArchitecture,
    pub values: Vec<T>,
    pub buffers: Vec<T>,
}

/// Gradient of the loss, laid out exactly like [`NetworkParams::values`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub values: Vec<T>,
}

/// Batch mean and (biased) variance of each normalization layer, in layer order.
/// Running statistics track the same biased estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchStats<T> {
    pub layers: Vec<(Vec<T>, Vec<T>)>,
}

/// Regression target for [`NetworkParams::loss_and_grad`].
#[derive(Clone, Copy, Debug)]
pub enum Target<'a, T> {
    /// One target per output entry (`n × output_dim`).
    Full(&'a Matrix<T>),
    /// One target per row, compared only against output `index[row]`.
    Masked { values: &'a [T], index: &'a [usize] },
}

#[derive(Clone, Debug)]
pub struct LossGrad<T> {
    pub loss: f64,
    pub grads: Gradients<T>,
    pub batch_stats: BatchStats<T>,
}

struct BnCache<T> {
    x_hat: Matrix<T>,
    inv_std: Vec<T>,
    mean: Vec<T>,
    var: Vec<T>,
}

struct UnitCache<T> {
    input: Matrix<T>,
    bn: Option<BnCache<T>>,
    // Post-activation output (or pre-residual output for a block's second unit).
    out: Matrix<T>,
}

struct BlockCache<T> {
    first: UnitCache<T>,
    second: UnitCache<T>,
    out: Matrix<T>,
}

struct ForwardCache<T> {
    hidden: Vec<UnitCache<T>>,
    blocks: Vec<BlockCache<T>>,
    last_hidden: Matrix<T>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Inference,
    Training,
}

impl<T: Scalar> NetworkParams<T> {
    /// He-normal weights, zero biases, identity normalization.
    pub fn init(arch: &NetArchitecture, seed: u64) -> Result<Self, NnError> {
        arch.validate()?;
        let layout = arch.layout();
        let mut params = Self::zeros(arch)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |values: &mut [T], d: DenseSlot| {
            let std = (2.0 / d.in_dim as f64).sqrt();
            let normal = Normal::new(0.0, std).expect("positive std");
            for w in &mut values[d.w..d.w + d.in_dim * d.out_dim] {
                *w = T::from_f64(normal.sample(&mut rng));
            }
        };
        let units = layout
            .hidden
            .iter()
            .chain(layout.blocks.iter().flatten())
            .copied()
            .collect::<Vec<_>>();
        for u in &units {
            fill(&mut params.values, u.dense);
        }
        fill(&mut params.values, layout.output);
        Ok(params)
    }

    /// All weights zero, normalization at identity.
    pub fn zeros(arch: &NetArchitecture) -> Result<Self, NnError> {
        arch.validate()?;
        let layout = arch.layout();
        let mut params = Self {
            arch: arch.clone(),
            values: vec![T::ZERO; layout.values],
            buffers: vec![T::ZERO; layout.buffers],
        };
        for u in layout.hidden.iter().chain(layout.blocks.iter().flatten()) {
            if let Some(bn) = u.bn {
                params.values[bn.gamma..bn.gamma + bn.dim].fill(T::ONE);
                params.buffers[bn.var..bn.var + bn.dim].fill(T::ONE);
            }
        }
        Ok(params)
    }

    pub fn from_parts(arch: NetArchitecture, values: Vec<T>, buffers: Vec<T>) -> Result<Self, NnError> {
        arch.validate()?;
        let layout = arch.layout();
        if values.len() != layout.values {
            return Err(NnError::ShapeMismatch {
                what: "parameter values",
                expected: layout.values,
                got: values.len(),
            });
        }
        if buffers.len() != layout.buffers {
            return Err(NnError::ShapeMismatch {
                what: "normalization buffers",
                expected: layout.buffers,
                got: buffers.len(),
            });
        }
        Ok(Self {
            arch,
            values,
            buffers,
        })
    }

    pub fn arch(&self) -> &NetArchitecture {
        &self.arch
    }

    pub fn num_params(&self) -> usize {
        self.values.len()
    }

    /// Frozen deep copy used as the bootstrap target network.
    pub fn snapshot_target(&self) -> Self {
        self.clone()
    }

    pub fn zero_grads(&self) -> Gradients<T> {
        Gradients {
            values: vec![T::ZERO; self.values.len()],
        }
    }

    /// Converts the element type (used to run f32 weights through f64 checks).
    pub fn cast<U: Scalar>(&self) -> NetworkParams<U> {
        NetworkParams {
            arch: self.arch.clone(),
            values: self.values.iter().map(|x| U::from_f64(x.to_f64())).collect(),
            buffers: self.buffers.iter().map(|x| U::from_f64(x.to_f64())).collect(),
        }
    }

    /// Mutable views of the weight matrix (`out × in`, row-major) and bias of
    /// every dense layer, in forward order.
    pub fn dense_layers_mut(&mut self) -> Vec<(&mut [T], &mut [T])> {
        let layout = self.arch.layout();
        let mut slots: Vec<DenseSlot> = layout
            .hidden
            .iter()
            .chain(layout.blocks.iter().flatten())
            .map(|u| u.dense)
            .collect();
        slots.push(layout.output);
        let mut out = Vec::with_capacity(slots.len());
        let mut rest: &mut [T] = &mut self.values;
        let mut consumed = 0;
        // Slots are laid out in increasing offset order.
        for d in slots {
            let skip = d.w - consumed;
            let (_, tail) = rest.split_at_mut(skip);
            let (w, tail) = tail.split_at_mut(d.in_dim * d.out_dim);
            let (b, tail) = tail.split_at_mut(d.out_dim);
            out.push((w, b));
            rest = tail;
            consumed = d.b + d.out_dim;
        }
        out
    }

    /// Inference-mode forward pass (normalization uses running statistics).
    pub fn forward(&self, x: &Matrix<T>) -> Result<Matrix<T>, NnError> {
        self.check_input(x)?;
        let (out, _) = self.run(x, Mode::Inference);
        Ok(out)
    }

    /// Training-mode forward pass (normalization uses batch statistics).
    pub fn forward_train(&self, x: &Matrix<T>) -> Result<Matrix<T>, NnError> {
        self.check_input(x)?;
        let (out, _) = self.run(x, Mode::Training);
        Ok(out)
    }

    /// Mean squared error over the compared entries and its gradient.
    pub fn loss_and_grad(&self, x: &Matrix<T>, target: Target<'_, T>) -> Result<LossGrad<T>, NnError> {
        self.check_input(x)?;
        let n = x.rows;
        let out_dim = self.arch.output_dim;
        match target {
            Target::Full(t) => {
                if t.rows != n || t.cols != out_dim {
                    return Err(NnError::ShapeMismatch {
                        what: "targets",
                        expected: n * out_dim,
                        got: t.rows * t.cols,
                    });
                }
                if t.data.iter().any(|v| !v.is_finite()) {
                    return Err(NnError::NonFinite("targets"));
                }
            }
            Target::Masked { values, index } => {
                if values.len() != n || index.len() != n {
                    return Err(NnError::ShapeMismatch {
                        what: "masked targets",
                        expected: n,
                        got: values.len().min(index.len()),
                    });
                }
                if let Some(&bad) = index.iter().find(|&&i| i >= out_dim) {
                    return Err(NnError::ShapeMismatch {
                        what: "mask index",
                        expected: out_dim,
                        got: bad,
                    });
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(NnError::NonFinite("targets"));
                }
            }
        }

        let (y, cache) = self.run(x, Mode::Training);
        let mut dy = Matrix::zeros(n, out_dim);
        let mut loss = 0.0f64;
        match target {
            Target::Full(t) => {
                let count = (n * out_dim).max(1) as f64;
                let scale = T::from_f64(2.0 / count);
                for i in 0..y.data.len() {
                    let diff = y.data[i] - t.data[i];
                    loss += diff.to_f64() * diff.to_f64();
                    dy.data[i] = scale * diff;
                }
                loss /= count;
            }
            Target::Masked { values, index } => {
                let count = n.max(1) as f64;
                let scale = T::from_f64(2.0 / count);
                for r in 0..n {
                    let c = index[r];
                    let diff = y.get(r, c) - values[r];
                    loss += diff.to_f64() * diff.to_f64();
                    dy.data[r * out_dim + c] = scale * diff;
                }
                loss /= count;
            }
        }
        if !loss.is_finite() {
            return Err(NnError::NonFinite("loss"));
        }

        let (grads, batch_stats) = self.backward(&cache, dy);
        Ok(LossGrad {
            loss,
            grads,
            batch_stats,
        })
    }

    /// Folds batch statistics from a training step into the running averages.
    pub fn update_running_stats(&mut self, stats: &BatchStats<T>) {
        let layout = self.arch.layout();
        let momentum = T::from_f64(BN_MOMENTUM);
        let keep = T::ONE - momentum;
        let bns = layout
            .hidden
            .iter()
            .chain(layout.blocks.iter().flatten())
            .filter_map(|u| u.bn);
        for (bn, (mean, var)) in bns.zip(&stats.layers) {
            for j in 0..bn.dim {
                let m = &mut self.buffers[bn.mean + j];
                *m = keep * *m + momentum * mean[j];
                let v = &mut self.buffers[bn.var + j];
                *v = keep * *v + momentum * var[j];
            }
        }
    }

    fn check_input(&self, x: &Matrix<T>) -> Result<(), NnError> {
        if x.cols != self.arch.input_dim {
            return Err(NnError::ShapeMismatch {
                what: "input width",
                expected: self.arch.input_dim,
                got: x.cols,
            });
        }
        Ok(())
    }

    fn run(&self, x: &Matrix<T>, mode: Mode) -> (Matrix<T>, ForwardCache<T>) {
        let layout = self.arch.layout();
        let mut hidden = Vec::with_capacity(layout.hidden.len());
        let mut a = x.clone();
        for u in &layout.hidden {
            let cache = self.unit_forward(*u, a, true, mode);
            a = cache.out.clone();
            hidden.push(cache);
        }
        let mut blocks = Vec::with_capacity(layout.blocks.len());
        for [u1, u2] in &layout.blocks {
            let first = self.unit_forward(*u1, a.clone(), true, mode);
            let second = self.unit_forward(*u2, first.out.clone(), false, mode);
            let mut out = second.out.clone();
            for (o, &skip) in out.data.iter_mut().zip(&a.data) {
                let s = *o + skip;
                *o = if s > T::ZERO { s } else { T::ZERO };
            }
            a = out.clone();
            blocks.push(BlockCache { first, second, out });
        }
        let d = layout.output;
        let y = affine(&a, &self.values[d.w..d.b], &self.values[d.b..d.b + d.out_dim], d.out_dim);
        (
            y,
            ForwardCache {
                hidden,
                blocks,
                last_hidden: a,
            },
        )
    }

    fn unit_forward(&self, u: UnitSlot, input: Matrix<T>, relu: bool, mode: Mode) -> UnitCache<T> {
        let d = u.dense;
        let mut z = affine(&input, &self.values[d.w..d.b], &self.values[d.b..d.b + d.out_dim], d.out_dim);
        let bn = u.bn.map(|bn| self.bn_forward(bn, &mut z, mode));
        if relu {
            for v in &mut z.data {
                if *v < T::ZERO {
                    *v = T::ZERO;
                }
            }
        }
        UnitCache { input, bn, out: z }
    }

    fn bn_forward(&self, bn: BnSlot, z: &mut Matrix<T>, mode: Mode) -> BnCache<T> {
        let n = z.rows;
        let dim = bn.dim;
        let gamma = &self.values[bn.gamma..bn.gamma + dim];
        let beta = &self.values[bn.beta..bn.beta + dim];
        let (mean, var) = match mode {
            Mode::Training => {
                let mut mean = vec![0.0f64; dim];
                let mut var = vec![0.0f64; dim];
                for r in 0..n {
                    for (m, &v) in mean.iter_mut().zip(z.row(r)) {
                        *m += v.to_f64();
                    }
                }
                let nf = n.max(1) as f64;
                mean.iter_mut().for_each(|m| *m /= nf);
                for r in 0..n {
                    for j in 0..dim {
                        let c = z.get(r, j).to_f64() - mean[j];
                        var[j] += c * c;
                    }
                }
                var.iter_mut().for_each(|v| *v /= nf);
                (
                    mean.into_iter().map(T::from_f64).collect::<Vec<_>>(),
                    var.into_iter().map(T::from_f64).collect::<Vec<_>>(),
                )
            }
            Mode::Inference => (
                self.buffers[bn.mean..bn.mean + dim].to_vec(),
                self.buffers[bn.var..bn.var + dim].to_vec(),
            ),
        };
        let inv_std: Vec<T> = var
            .iter()
            .map(|&v| T::ONE / (v + T::from_f64(BN_EPS)).sqrt())
            .collect();
        let mut x_hat = Matrix::zeros(n, dim);
        for r in 0..n {
            for j in 0..dim {
                let h = (z.get(r, j) - mean[j]) * inv_std[j];
                x_hat.data[r * dim + j] = h;
                z.data[r * dim + j] = gamma[j] * h + beta[j];
            }
        }
        BnCache {
            x_hat,
            inv_std,
            mean,
            var,
        }
    }

    fn backward(&self, cache: &ForwardCache<T>, dy: Matrix<T>) -> (Gradients<T>, BatchStats<T>) {
        let layout = self.arch.layout();
        let mut g = self.zero_grads();

        let d = layout.output;
        accumulate_weight_grad(&dy, &cache.last_hidden, &mut g.values[d.w..d.b]);
        column_sums(&dy, &mut g.values[d.b..d.b + d.out_dim]);
        let mut da = input_grad(&dy, &self.values[d.w..d.b], d.in_dim);

        for ([u1, u2], bc) in layout.blocks.iter().zip(&cache.blocks).rev() {
            // out = relu(second + skip)
            for (dv, &o) in da.data.iter_mut().zip(&bc.out.data) {
                if o <= T::ZERO {
                    *dv = T::ZERO;
                }
            }
            let dh = self.unit_backward(*u2, &bc.second, da.clone(), false, &mut g);
            let dskip = self.unit_backward(*u1, &bc.first, dh, true, &mut g);
            for (dv, s) in da.data.iter_mut().zip(dskip.data) {
                *dv += s;
            }
        }
        for (u, uc) in layout.hidden.iter().zip(&cache.hidden).rev() {
            da = self.unit_backward(*u, uc, da, true, &mut g);
        }

        let stats = cache
            .hidden
            .iter()
            .chain(cache.blocks.iter().flat_map(|b| [&b.first, &b.second]))
            .filter_map(|u| u.bn.as_ref())
            .map(|bn| (bn.mean.clone(), bn.var.clone()))
            .collect();
        (g, BatchStats { layers: stats })
    }

    fn unit_backward(
        &self,
        u: UnitSlot,
        cache: &UnitCache<T>,
        mut dout: Matrix<T>,
        relu: bool,
        g: &mut Gradients<T>,
    ) -> Matrix<T> {
        if relu {
            for (dv, &o) in dout.data.iter_mut().zip(&cache.out.data) {
                if o <= T::ZERO {
                    *dv = T::ZERO;
                }
            }
        }
        let mut dz = dout;
        if let (Some(bn), Some(bc)) = (u.bn, cache.bn.as_ref()) {
            let n = dz.rows;
            let dim = bn.dim;
            let mut sum_dy = vec![T::ZERO; dim];
            let mut sum_dy_xhat = vec![T::ZERO; dim];
            for r in 0..n {
                for j in 0..dim {
                    let v = dz.get(r, j);
                    sum_dy[j] += v;
                    sum_dy_xhat[j] += v * bc.x_hat.get(r, j);
                }
            }
            for j in 0..dim {
                g.values[bn.gamma + j] += sum_dy_xhat[j];
                g.values[bn.beta + j] += sum_dy[j];
            }
            let nf = T::from_f64(n.max(1) as f64);
            for r in 0..n {
                for j in 0..dim {
                    let gamma = self.values[bn.gamma + j];
                    let v = dz.get(r, j);
                    dz.data[r * dim + j] = gamma * bc.inv_std[j] / nf
                        * (nf * v - sum_dy[j] - bc.x_hat.get(r, j) * sum_dy_xhat[j]);
                }
            }
        }
        let d = u.dense;
        accumulate_weight_grad(&dz, &cache.input, &mut g.values[d.w..d.b]);
        column_sums(&dz, &mut g.values[d.b..d.b + d.out_dim]);
        input_grad(&dz, &self.values[d.w..d.b], d.in_dim)
    }
}

fn column_sums<T: Scalar>(m: &Matrix<T>, out: &mut [T]) {
    for r in 0..m.rows {
        for (o, &v) in out.iter_mut().zip(m.row(r)) {
            *o += v;
        }
    }
}
