use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sign of the exponent in the softmax over Q-factors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoltzmannSign {
    /// `p(a) ∝ exp(−q(a)/T)`: cheaper actions are more likely.
    #[default]
    PreferLow,
    /// `p(a) ∝ exp(+q(a)/T)`.
    AsPrinted,
}

fn logits(q: &[f64], temperature: f64, sign: BoltzmannSign) -> Result<Vec<f64>> {
    if q.is_empty() {
        return Err(Error::Config("Boltzmann sampling needs at least one action".into()));
    }
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::Config(format!("temperature must be positive, got {temperature}")));
    }
    if q.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Q-values"));
    }
    let s = match sign {
        BoltzmannSign::PreferLow => -1.0,
        BoltzmannSign::AsPrinted => 1.0,
    };
    let z: Vec<f64> = q.iter().map(|&v| s * v / temperature).collect();
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(z.into_iter().map(|v| (v - max).exp()).collect())
}

/// Softmax probabilities over `q`, stabilized by subtracting the largest logit.
pub fn boltzmann_probs(q: &[f64], temperature: f64, sign: BoltzmannSign) -> Result<Vec<f64>> {
    let w = logits(q, temperature, sign)?;
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|v| v / total).collect())
}

pub fn boltzmann_sample<R: Rng + ?Sized>(
    q: &[f64],
    temperature: f64,
    sign: BoltzmannSign,
    rng: &mut R,
) -> Result<usize> {
    let w = logits(q, temperature, sign)?;
    let total: f64 = w.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &x) in w.iter().enumerate() {
        if u < x {
            return Ok(i);
        }
        u -= x;
    }
    // Rounding can leave u just past the last bucket.
    Ok(w.iter().rposition(|&x| x > 0.0).unwrap_or(0))
}
