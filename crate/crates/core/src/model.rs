//! Environments and cost models shared by training, search and the oracle.
//!
//! A cost model maps a batch of states to a row-major `n × output_dim` matrix
//! of non-negative costs: one column for a cost-to-go heuristic, one column
//! per action for a Q-function. Network-backed models clamp raw outputs at
//! zero here, so everything downstream sees rectified values.

use std::fmt::Debug;
use std::hash::Hash;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{load_checkpoint, AdamConfig, Matrix, NetworkParams, OptState, Target};
use crate::puzzle::{ActionSpace, PuzzleKind, PuzzleState};

/// Deterministic environment with a fixed, indexed action set.
pub trait Environment: Sync {
    type State: Clone + Eq + Hash + Debug + Send + Sync;

    fn num_actions(&self) -> usize;

    /// Successor and transition cost. `action < num_actions()`.
    fn step(&self, s: &Self::State, action: usize) -> (Self::State, f64);

    fn is_goal(&self, s: &Self::State) -> bool;
}

impl Environment for ActionSpace {
    type State = PuzzleState;

    fn num_actions(&self) -> usize {
        self.len()
    }

    #[inline]
    fn step(&self, s: &PuzzleState, action: usize) -> (PuzzleState, f64) {
        (ActionSpace::step(self, s, action), self.cost(action))
    }

    fn is_goal(&self, s: &PuzzleState) -> bool {
        s.is_goal()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    /// One column: estimated cost-to-go of the state.
    CostToGo,
    /// One column per action: estimated Q-factor of taking that action.
    QFactors,
}

pub trait CostModel<S>: Sync {
    fn output_dim(&self) -> usize;

    /// Row-major `states.len() × output_dim()` costs.
    fn predict(&self, states: &[S]) -> Result<Vec<f64>>;
}

impl<S, M: CostModel<S> + ?Sized> CostModel<S> for &M {
    fn output_dim(&self) -> usize {
        (**self).output_dim()
    }
    fn predict(&self, states: &[S]) -> Result<Vec<f64>> {
        (**self).predict(states)
    }
}

/// Regression target for one update step.
#[derive(Clone, Copy, Debug)]
pub enum FitTarget<'a> {
    /// `n × output_dim` targets.
    Full(&'a [f64]),
    /// One target per row for output `index[row]` only.
    Masked { values: &'a [f64], index: &'a [usize] },
}

/// A trainable cost model: one optimizer step per `fit`.
pub trait Learner<S>: CostModel<S> {
    type Frozen: CostModel<S> + Send;

    /// Takes one step towards `target` and returns the loss before the step.
    fn fit(&mut self, states: &[S], target: FitTarget<'_>) -> Result<f64>;

    /// Frozen copy used for bootstrap targets.
    fn snapshot(&self) -> Self::Frozen;
}

const PREDICT_CHUNK: usize = 4096;

/// Network evaluated on encoded puzzle states.
#[derive(Clone, Debug, PartialEq)]
pub struct NetModel {
    puzzle: PuzzleKind,
    params: NetworkParams<f32>,
}

impl NetModel {
    pub fn new(puzzle: PuzzleKind, params: NetworkParams<f32>) -> Result<Self> {
        let expected = puzzle.encoded_len();
        let got = params.arch().input_dim;
        if got != expected {
            return Err(Error::Width { expected, got });
        }
        Ok(Self { puzzle, params })
    }

    pub fn load(path: &Path, puzzle: PuzzleKind) -> Result<Self> {
        Self::new(puzzle, load_checkpoint(path)?.params)
    }

    pub fn puzzle(&self) -> PuzzleKind {
        self.puzzle
    }

    pub fn params(&self) -> &NetworkParams<f32> {
        &self.params
    }

    fn encode(&self, states: &[PuzzleState]) -> Matrix<f32> {
        Matrix::from_vec(
            states.len(),
            self.puzzle.encoded_len(),
            self.puzzle.encode_batch(states),
        )
    }
}

impl CostModel<PuzzleState> for NetModel {
    fn output_dim(&self) -> usize {
        self.params.arch().output_dim
    }

    fn predict(&self, states: &[PuzzleState]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(states.len() * self.output_dim());
        for chunk in states.chunks(PREDICT_CHUNK) {
            let y = self.params.forward(&self.encode(chunk))?;
            out.extend(y.data.iter().map(|&v| (v as f64).max(0.0)));
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network output"));
        }
        Ok(out)
    }
}

/// Network plus Adam state.
#[derive(Clone, Debug)]
pub struct NetLearner {
    model: NetModel,
    opt: OptState<f32>,
}

impl NetLearner {
    pub fn new(model: NetModel, adam: AdamConfig) -> Self {
        let opt = OptState::new(&model.params, adam);
        Self { model, opt }
    }

    pub fn from_parts(model: NetModel, opt: OptState<f32>) -> Result<Self> {
        if opt.m.len() != model.params.num_params() {
            return Err(Error::Width {
                expected: model.params.num_params(),
                got: opt.m.len(),
            });
        }
        Ok(Self { model, opt })
    }

    pub fn model(&self) -> &NetModel {
        &self.model
    }

    pub fn opt(&self) -> &OptState<f32> {
        &self.opt
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.opt.config.lr = lr;
    }
}

impl CostModel<PuzzleState> for NetLearner {
    fn output_dim(&self) -> usize {
        self.model.output_dim()
    }

    fn predict(&self, states: &[PuzzleState]) -> Result<Vec<f64>> {
        self.model.predict(states)
    }
}

impl Learner<PuzzleState> for NetLearner {
    type Frozen = NetModel;

    fn fit(&mut self, states: &[PuzzleState], target: FitTarget<'_>) -> Result<f64> {
        let x = self.model.encode(states);
        let dim = self.output_dim();
        let lg = match target {
            FitTarget::Full(t) => {
                let t = Matrix::from_vec(states.len(), dim, t.iter().map(|&v| v as f32).collect());
                self.model.params.loss_and_grad(&x, Target::Full(&t))?
            }
            FitTarget::Masked { values, index } => {
                let values: Vec<f32> = values.iter().map(|&v| v as f32).collect();
                self.model.params.loss_and_grad(
                    &x,
                    Target::Masked {
                        values: &values,
                        index,
                    },
                )?
            }
        };
        self.opt.adam_step(&mut self.model.params, &lg.grads)?;
        self.model.params.update_running_stats(&lg.batch_stats);
        Ok(lg.loss)
    }

    fn snapshot(&self) -> NetModel {
        NetModel {
            puzzle: self.model.puzzle,
            params: self.model.params.snapshot_target(),
        }
    }
}

/// Lookup table over states `0..num_states`. `fit` overwrites each targeted
/// entry with the mean of its targets in the batch, which turns the update
/// rules into their exact tabular form.
#[derive(Clone, Debug, PartialEq)]
pub struct TableModel {
    dim: usize,
    values: Vec<f64>,
}

impl TableModel {
    pub fn zeros(num_states: usize, dim: usize) -> Self {
        Self {
            dim,
            values: vec![0.0; num_states * dim],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, s: u32) -> &[f64] {
        let s = s as usize;
        &self.values[s * self.dim..(s + 1) * self.dim]
    }

    fn check(&self, s: u32) -> Result<usize> {
        let s = s as usize;
        if (s + 1) * self.dim > self.values.len() {
            return Err(Error::Uncovered);
        }
        Ok(s * self.dim)
    }
}

impl CostModel<u32> for TableModel {
    fn output_dim(&self) -> usize {
        self.dim
    }

    fn predict(&self, states: &[u32]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(states.len() * self.dim);
        for &s in states {
            let at = self.check(s)?;
            out.extend_from_slice(&self.values[at..at + self.dim]);
        }
        Ok(out)
    }
}

impl Learner<u32> for TableModel {
    type Frozen = TableModel;

    fn fit(&mut self, states: &[u32], target: FitTarget<'_>) -> Result<f64> {
        let mut sums: rustc_hash::FxHashMap<usize, (f64, usize)> = Default::default();
        let mut loss = 0.0;
        let mut push = |slot: usize, t: f64, values: &[f64]| {
            let d = values[slot] - t;
            let e = sums.entry(slot).or_insert((0.0, 0));
            e.0 += t;
            e.1 += 1;
            d * d
        };
        let count = match target {
            FitTarget::Full(t) => {
                for (r, &s) in states.iter().enumerate() {
                    let at = self.check(s)?;
                    for c in 0..self.dim {
                        loss += push(at + c, t[r * self.dim + c], &self.values);
                    }
                }
                states.len() * self.dim
            }
            FitTarget::Masked { values, index } => {
                for (r, &s) in states.iter().enumerate() {
                    let at = self.check(s)?;
                    loss += push(at + index[r], values[r], &self.values);
                }
                states.len()
            }
        };
        if !loss.is_finite() {
            return Err(Error::NonFinite("loss"));
        }
        for (slot, (sum, n)) in sums {
            self.values[slot] = sum / n as f64;
        }
        Ok(loss / count.max(1) as f64)
    }

    fn snapshot(&self) -> TableModel {
        self.clone()
    }
}

/// `h ≡ 0`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroHeuristic;

impl<S> CostModel<S> for ZeroHeuristic {
    fn output_dim(&self) -> usize {
        1
    }
    fn predict(&self, states: &[S]) -> Result<Vec<f64>> {
        Ok(vec![0.0; states.len()])
    }
}

/// Q-factors `q(s, a) = cost(s, a) + h(A(s, a))` from a cost-to-go model,
/// with all children evaluated in one call.
pub struct QFromHeuristic<'a, E, H> {
    env: &'a E,
    h: H,
}

impl<'a, E, H> QFromHeuristic<'a, E, H> {
    pub fn new(env: &'a E, h: H) -> Self {
        Self { env, h }
    }
}

impl<E: Environment, H: CostModel<E::State>> CostModel<E::State> for QFromHeuristic<'_, E, H> {
    fn output_dim(&self) -> usize {
        self.env.num_actions()
    }

    fn predict(&self, states: &[E::State]) -> Result<Vec<f64>> {
        let na = self.env.num_actions();
        let mut children = Vec::with_capacity(states.len() * na);
        let mut costs = Vec::with_capacity(states.len() * na);
        for s in states {
            for a in 0..na {
                let (c, cost) = self.env.step(s, a);
                children.push(c);
                costs.push(cost);
            }
        }
        let h = self.h.predict(&children)?;
        Ok(costs.iter().zip(&h).map(|(c, h)| c + h).collect())
    }
}

/// Cost-to-go `h(s) = min_a q(s, a)` from a Q-function.
pub struct HeuristicFromQ<Q>(pub Q);

impl<S, Q: CostModel<S>> CostModel<S> for HeuristicFromQ<Q> {
    fn output_dim(&self) -> usize {
        1
    }

    fn predict(&self, states: &[S]) -> Result<Vec<f64>> {
        let dim = self.0.output_dim();
        let q = self.0.predict(states)?;
        Ok(q.chunks(dim)
            .map(|row| row.iter().copied().fold(f64::INFINITY, f64::min))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::NetArchitecture;

    #[test]
    fn net_model_rejects_wrong_input_width() {
        let params = NetworkParams::init(&NetArchitecture::desk(10, 1), 0).unwrap();
        assert!(matches!(
            NetModel::new(PuzzleKind::Cube2, params),
            Err(Error::Width { expected: 192, got: 10 })
        ));
    }

    #[test]
    fn net_outputs_are_rectified() {
        let arch = NetArchitecture {
            input_dim: 192,
            hidden: vec![],
            res_blocks: 0,
            output_dim: 2,
            batch_norm: false,
        };
        let mut params = NetworkParams::zeros(&arch).unwrap();
        let n = params.values.len();
        params.values[n - 2] = -3.0;
        params.values[n - 1] = 2.5;
        let model = NetModel::new(PuzzleKind::Cube2, params).unwrap();
        assert_eq!(model.predict(&[PuzzleState::GOAL]).unwrap(), vec![0.0, 2.5]);
    }

    #[test]
    fn learner_fit_reduces_loss_and_snapshot_is_isolated() {
        let arch = NetArchitecture {
            input_dim: 192,
            hidden: vec![16],
            res_blocks: 1,
            output_dim: 1,
            batch_norm: false,
        };
        let model = NetModel::new(PuzzleKind::Cube2, NetworkParams::init(&arch, 5).unwrap()).unwrap();
        let mut learner = NetLearner::new(model, AdamConfig::default());
        let frozen = learner.snapshot();
        let space = ActionSpace::new(PuzzleKind::Cube2, 1).unwrap();
        let states: Vec<_> = (0..6).map(|a| space.step(&PuzzleState::GOAL, a)).collect();
        let target = vec![3.0; 6];
        let first = learner.fit(&states, FitTarget::Full(&target)).unwrap();
        let mut last = first;
        for _ in 0..200 {
            last = learner.fit(&states, FitTarget::Full(&target)).unwrap();
        }
        assert!(last < first * 0.01, "{first} -> {last}");
        assert_ne!(frozen.predict(&states).unwrap(), learner.predict(&states).unwrap());
        assert_eq!(learner.opt().step, 201);
    }

    #[test]
    fn table_fit_assigns_batch_means() {
        let mut t = TableModel::zeros(3, 2);
        let loss = t
            .fit(
                &[0, 2, 0],
                FitTarget::Masked {
                    values: &[4.0, 1.0, 2.0],
                    index: &[1, 0, 1],
                },
            )
            .unwrap();
        assert_eq!(loss, (16.0 + 1.0 + 4.0) / 3.0);
        assert_eq!(t.values(), &[0.0, 3.0, 0.0, 0.0, 1.0, 0.0]);
        assert!(matches!(t.predict(&[3]), Err(Error::Uncovered)));
    }

    #[test]
    fn q_from_heuristic_adds_transition_costs() {
        let space = ActionSpace::new(PuzzleKind::Cube2, 1).unwrap();
        let q = QFromHeuristic::new(&space, ZeroHeuristic);
        assert_eq!(q.output_dim(), 6);
        assert_eq!(q.predict(&[PuzzleState::GOAL]).unwrap(), vec![1.0; 6]);
        let h = HeuristicFromQ(&q);
        assert_eq!(h.predict(&[PuzzleState::GOAL; 2]).unwrap(), vec![1.0, 1.0]);
    }
}
