use crate::error::{Error, Result};
use crate::model::{CostModel, Environment, OutputKind};

/// Fraction of `states` that reach the goal within `step_cap` greedy steps.
///
/// A cost-to-go model moves to the child minimizing `c + γ·h(child)` (with
/// `h` taken as 0 at the goal); a Q-model moves along `argmin_a q(s, a)`.
/// Ties go to the lowest action index. All unsolved states advance together,
/// one batched model call per step.
pub fn eval_greedy<E, M>(model: &M, kind: OutputKind, env: &E, states: &[E::State], step_cap: usize, gamma: f64) -> Result<f64>
where
    E: Environment,
    M: CostModel<E::State> + ?Sized,
{
    if states.is_empty() {
        return Err(Error::Config("greedy evaluation needs at least one state".into()));
    }
    let na = env.num_actions();
    let expected = match kind {
        OutputKind::CostToGo => 1,
        OutputKind::QFactors => na,
    };
    if model.output_dim() != expected {
        return Err(Error::Width {
            expected,
            got: model.output_dim(),
        });
    }

    let mut active: Vec<E::State> = states.iter().filter(|s| !env.is_goal(s)).cloned().collect();
    let mut solved = states.len() - active.len();
    for _ in 0..step_cap {
        if active.is_empty() {
            break;
        }
        let next: Vec<E::State> = match kind {
            OutputKind::QFactors => {
                let q = model.predict(&active)?;
                active
                    .iter()
                    .zip(q.chunks(na))
                    .map(|(s, row)| env.step(s, argmin(row)).0)
                    .collect()
            }
            OutputKind::CostToGo => {
                let mut children = Vec::with_capacity(active.len() * na);
                let mut costs = Vec::with_capacity(active.len() * na);
                for s in &active {
                    for a in 0..na {
                        let (c, cost) = env.step(s, a);
                        costs.push(cost);
                        children.push(c);
                    }
                }
                let h = model.predict(&children)?;
                let scores: Vec<f64> = (0..children.len())
                    .map(|k| {
                        let tail = if env.is_goal(&children[k]) { 0.0 } else { h[k] };
                        costs[k] + gamma * tail
                    })
                    .collect();
                scores
                    .chunks(na)
                    .enumerate()
                    .map(|(i, row)| children[i * na + argmin(row)].clone())
                    .collect()
            }
        };
        active = next.into_iter().filter(|s| !env.is_goal(s)).collect();
        solved = states.len() - active.len();
    }
    Ok(solved as f64 / states.len() as f64)
}

/// First index of the smallest entry.
fn argmin(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v < row[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{QFromHeuristic, ZeroHeuristic};
    use crate::oracle::{bfs_distances, ExactDqn, ExactHeuristic};
    use crate::puzzle::{ActionSpace, PuzzleKind, PuzzleState};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ties_break_towards_the_lowest_index() {
        assert_eq!(argmin(&[2.0, 1.0, 1.0, 3.0]), 1);
        assert_eq!(argmin(&[0.0, 0.0]), 0);
    }

    #[test]
    fn goal_states_count_as_solved() {
        let space = ActionSpace::new(PuzzleKind::Cube2, 1).unwrap();
        let f = eval_greedy(&ZeroHeuristic, OutputKind::CostToGo, &space, &[PuzzleState::GOAL; 5], 1, 1.0).unwrap();
        assert_eq!(f, 1.0);
    }

    #[test]
    fn exact_models_solve_everything() {
        let space = ActionSpace::new(PuzzleKind::Cube2, 1).unwrap();
        let table = bfs_distances(&space).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let states: Vec<_> = (0..200).map(|_| PuzzleKind::Cube2.scramble(30, &mut rng)).collect();
        let h = ExactHeuristic::new(&table);
        assert_eq!(eval_greedy(&h, OutputKind::CostToGo, &space, &states, 14, 1.0).unwrap(), 1.0);
        let q = ExactDqn::new(&table, &space).unwrap();
        assert_eq!(eval_greedy(&q, OutputKind::QFactors, &space, &states, 14, 1.0).unwrap(), 1.0);
        // Zero heuristic wanders: always action 0, which cycles.
        let z = QFromHeuristic::new(&space, ZeroHeuristic);
        assert!(eval_greedy(&z, OutputKind::QFactors, &space, &states, 28, 1.0).unwrap() < 0.5);
    }
}
