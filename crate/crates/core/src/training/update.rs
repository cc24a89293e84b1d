use rand::Rng;

use super::boltzmann::{boltzmann_sample, BoltzmannSign};
use crate::error::{Error, Result};
use crate::model::{CostModel, Environment, FitTarget, Learner};

/// Bookkeeping for one update step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct UpdateStats {
    pub loss: f64,
    /// Model invocations, each one batched forward pass.
    pub forward_passes: u64,
    /// States pushed through those passes.
    pub states_evaluated: u64,
}

impl std::ops::AddAssign for UpdateStats {
    fn add_assign(&mut self, o: Self) {
        self.loss += o.loss;
        self.forward_passes += o.forward_passes;
        self.states_evaluated += o.states_evaluated;
    }
}

fn check_width(got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::Width { expected, got });
    }
    Ok(())
}

/// Bootstrap targets `min_a [c + γ·j⁻(A(s, a))]`, with `j⁻` taken as 0 at
/// goal children and the target itself 0 at goal states. All children go
/// through the frozen model in one call.
pub fn davi_targets<E, M>(target: &M, env: &E, states: &[E::State], gamma: f64) -> Result<Vec<f64>>
where
    E: Environment,
    M: CostModel<E::State> + ?Sized,
{
    check_width(target.output_dim(), 1)?;
    let na = env.num_actions();
    let mut children = Vec::with_capacity(states.len() * na);
    let mut costs = Vec::with_capacity(states.len() * na);
    for s in states {
        for a in 0..na {
            let (c, cost) = env.step(s, a);
            children.push(c);
            costs.push(cost);
        }
    }
    let h = target.predict(&children)?;
    Ok(states
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if env.is_goal(s) {
                return 0.0;
            }
            (i * na..(i + 1) * na)
                .map(|k| {
                    let tail = if env.is_goal(&children[k]) { 0.0 } else { h[k] };
                    costs[k] + gamma * tail
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect())
}

/// One approximate value iteration step: regress `j(s)` onto [`davi_targets`].
pub fn davi_update<E, L>(learner: &mut L, target: &L::Frozen, env: &E, states: &[E::State], gamma: f64) -> Result<UpdateStats>
where
    E: Environment,
    L: Learner<E::State>,
{
    check_width(learner.output_dim(), 1)?;
    let t = davi_targets(target, env, states, gamma)?;
    let loss = learner.fit(states, FitTarget::Full(&t))?;
    let n = states.len() as u64;
    Ok(UpdateStats {
        loss,
        forward_passes: 2,
        states_evaluated: n * env.num_actions() as u64 + n,
    })
}

/// Exploration policy for Q-learning.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exploration {
    pub temperature: f64,
    pub sign: BoltzmannSign,
}

/// One Q-learning step on single transitions.
///
/// For each state an action is drawn from the Boltzmann distribution over
/// the current Q-values, the successor is generated, and output `a` is
/// regressed onto `c + γ·min_a′ q⁻(s′, a′)` (the min is 0 when `s′` is a
/// goal). Three batched passes per call regardless of the action count.
pub fn qlearn_update<E, L, R>(
    learner: &mut L,
    target: &L::Frozen,
    env: &E,
    states: &[E::State],
    gamma: f64,
    explore: Exploration,
    rng: &mut R,
) -> Result<UpdateStats>
where
    E: Environment,
    L: Learner<E::State>,
    R: Rng + ?Sized,
{
    let na = env.num_actions();
    check_width(learner.output_dim(), na)?;
    check_width(target.output_dim(), na)?;

    let q = learner.predict(states)?;
    let mut actions = Vec::with_capacity(states.len());
    let mut next = Vec::with_capacity(states.len());
    let mut costs = Vec::with_capacity(states.len());
    for (s, row) in states.iter().zip(q.chunks(na)) {
        let a = boltzmann_sample(row, explore.temperature, explore.sign, rng)?;
        let (c, cost) = env.step(s, a);
        actions.push(a);
        next.push(c);
        costs.push(cost);
    }

    let q_next = target.predict(&next)?;
    let values: Vec<f64> = next
        .iter()
        .zip(q_next.chunks(na))
        .zip(&costs)
        .map(|((s, row), &cost)| {
            if env.is_goal(s) {
                cost
            } else {
                cost + gamma * row.iter().copied().fold(f64::INFINITY, f64::min)
            }
        })
        .collect();

    let loss = learner.fit(
        states,
        FitTarget::Masked {
            values: &values,
            index: &actions,
        },
    )?;
    Ok(UpdateStats {
        loss,
        forward_passes: 3,
        states_evaluated: 3 * states.len() as u64,
    })
}
