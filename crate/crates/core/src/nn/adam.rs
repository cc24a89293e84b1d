use serde::{Deserialize, Serialize};

use super::matrix::Scalar;
use super::network::{Gradients, NetworkParams};
use super::NnError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam moments for one parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct OptState<T> {
    pub config: AdamConfig,
    pub step: u64,
    pub m: Vec<T>,
    pub v: Vec<T>,
}

impl<T: Scalar> OptState<T> {
    pub fn new(params: &NetworkParams<T>, config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            m: vec![T::ZERO; params.num_params()],
            v: vec![T::ZERO; params.num_params()],
        }
    }

    /// One bias-corrected Adam update of `params` in place.
    pub fn adam_step(&mut self, params: &mut NetworkParams<T>, grads: &Gradients<T>) -> Result<(), NnError> {
        self.apply(&mut params.values, &grads.values)
    }

    /// Adam on a raw parameter slice.
    pub fn apply(&mut self, params: &mut [T], grads: &[T]) -> Result<(), NnError> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(NnError::ShapeMismatch {
                what: "adam state",
                expected: self.m.len(),
                got: params.len().min(grads.len()),
            });
        }
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(NnError::NonFinite("gradients"));
        }
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.step as i32;
        let (b1, b2) = (T::from_f64(beta1), T::from_f64(beta2));
        let (c1, c2) = (T::ONE - b1, T::ONE - b2);
        let m_hat_scale = T::from_f64(1.0 / (1.0 - beta1.powi(t)));
        let v_hat_scale = T::from_f64(1.0 / (1.0 - beta2.powi(t)));
        let lr = T::from_f64(lr);
        let eps = T::from_f64(eps);
        for i in 0..params.len() {
            let g = grads[i];
            let m = b1 * self.m[i] + c1 * g;
            let v = b2 * self.v[i] + c2 * g * g;
            self.m[i] = m;
            self.v[i] = v;
            let m_hat = m * m_hat_scale;
            let v_hat = v * v_hat_scale;
            params[i] = params[i] - lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}
