use rustc_hash::FxHashMap;

use super::coords::{CUBE2_COORDS, PERMS};
use crate::error::{Error, Result};
use crate::model::Environment;
use crate::puzzle::{ActionSpace, PuzzleError, PuzzleKind, PuzzleState};

/// Deterministic graph with at most one successor per (state, action).
/// A missing successor means the action is unavailable (its Q-factor is +∞).
#[derive(Clone, Debug, PartialEq)]
pub struct ExplicitGraph {
    num_actions: usize,
    edges: Vec<Option<(u32, f64)>>,
    goal: Vec<bool>,
}

impl ExplicitGraph {
    /// `edges[s * num_actions + a]` is the successor and cost of `a` in `s`.
    pub fn new(num_actions: usize, edges: Vec<Option<(u32, f64)>>, goals: &[u32]) -> Result<Self> {
        if num_actions == 0 || edges.len() % num_actions != 0 {
            return Err(Error::Config("edge list must be states × actions".into()));
        }
        let n = edges.len() / num_actions;
        for &(t, c) in edges.iter().flatten() {
            if t as usize >= n {
                return Err(Error::Config(format!("successor {t} out of range")));
            }
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::Config(format!("invalid transition cost {c}")));
            }
        }
        let mut goal = vec![false; n];
        for &g in goals {
            *goal
                .get_mut(g as usize)
                .ok_or_else(|| Error::Config(format!("goal {g} out of range")))? = true;
        }
        Ok(Self {
            num_actions,
            edges,
            goal,
        })
    }

    pub fn num_states(&self) -> usize {
        self.goal.len()
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn successor(&self, s: u32, a: usize) -> Option<(u32, f64)> {
        self.edges[s as usize * self.num_actions + a]
    }

    pub fn is_goal(&self, s: u32) -> bool {
        self.goal[s as usize]
    }

    /// Environment view; fails unless every action is available everywhere.
    pub fn env(&self) -> Result<GraphEnv<'_>> {
        if let Some(i) = self.edges.iter().position(Option::is_none) {
            return Err(Error::MissingEdge {
                state: i / self.num_actions,
                action: i % self.num_actions,
            });
        }
        Ok(GraphEnv(self))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GraphEnv<'a>(&'a ExplicitGraph);

impl Environment for GraphEnv<'_> {
    type State = u32;

    fn num_actions(&self) -> usize {
        self.0.num_actions
    }

    fn step(&self, s: &u32, action: usize) -> (u32, f64) {
        self.0.successor(*s, action).expect("total graph")
    }

    fn is_goal(&self, s: &u32) -> bool {
        self.0.is_goal(*s)
    }
}

/// States within `max_depth` actions of the goal and the edges among them;
/// actions leaving the set are dropped. State 0 is the goal and states are
/// numbered in BFS order.
pub fn induced_subgraph(space: &ActionSpace, max_depth: usize) -> (ExplicitGraph, Vec<PuzzleState>) {
    let mut states = vec![PuzzleState::GOAL];
    let mut index: FxHashMap<PuzzleState, u32> = FxHashMap::default();
    index.insert(PuzzleState::GOAL, 0);
    let mut layer = 0..1;
    for _ in 0..max_depth {
        let start = states.len();
        for i in layer.clone() {
            for a in 0..space.len() {
                let c = space.step(&states[i], a);
                if !index.contains_key(&c) {
                    index.insert(c, states.len() as u32);
                    states.push(c);
                }
            }
        }
        layer = start..states.len();
    }
    let na = space.len();
    let mut edges = Vec::with_capacity(states.len() * na);
    for s in &states {
        for a in 0..na {
            edges.push(index.get(&space.step(s, a)).map(|&t| (t, space.cost(a))));
        }
    }
    let graph = ExplicitGraph::new(na, edges, &[0]).expect("valid by construction");
    (graph, states)
}

/// The 2x2x2 with orientations ignored: 5040 corner permutations, goal 0.
pub fn corner_permutation_graph(space: &ActionSpace) -> Result<ExplicitGraph> {
    if space.puzzle() != PuzzleKind::Cube2 {
        return Err(PuzzleError::Unsupported("the corner-permutation graph", space.puzzle()).into());
    }
    let na = space.len();
    let mut edges = Vec::with_capacity(PERMS * na);
    for p in 0..PERMS as u32 {
        for a in 0..na {
            edges.push(Some((CUBE2_COORDS.apply_perm(p, space.sequence(a)), space.cost(a))));
        }
    }
    ExplicitGraph::new(na, edges, &[0])
}

/// Synchronous sweeps of `J(s) ← min_a [c + γ·J(s′)]` with `J(goal) = 0`,
/// starting from zero, until the largest change is below `tol`.
pub fn tabular_value_iteration(graph: &ExplicitGraph, gamma: f64, tol: f64, max_sweeps: usize) -> Result<Vec<f64>> {
    let n = graph.num_states();
    let mut j = vec![0.0; n];
    for _ in 0..max_sweeps {
        let next: Vec<f64> = (0..n as u32)
            .map(|s| {
                if graph.is_goal(s) {
                    return 0.0;
                }
                (0..graph.num_actions)
                    .filter_map(|a| graph.successor(s, a))
                    .map(|(t, c)| c + gamma * j[t as usize])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let delta = max_change(&j, &next);
        j = next;
        if delta < tol {
            return Ok(j);
        }
    }
    Err(Error::NoConvergence(max_sweeps))
}

/// Synchronous sweeps of `Q(s, a) ← c + γ·min_a′ Q(s′, a′)`, where the min
/// is 0 when `s′` is a goal. Unavailable actions stay at +∞. Returns a
/// row-major `states × actions` table.
pub fn tabular_q_iteration(graph: &ExplicitGraph, gamma: f64, tol: f64, max_sweeps: usize) -> Result<Vec<f64>> {
    let (n, na) = (graph.num_states(), graph.num_actions);
    let mut q = vec![0.0; n * na];
    for _ in 0..max_sweeps {
        let best: Vec<f64> = q
            .chunks(na)
            .map(|row| row.iter().copied().fold(f64::INFINITY, f64::min))
            .collect();
        let next: Vec<f64> = (0..n * na)
            .map(|i| match graph.edges[i] {
                None => f64::INFINITY,
                Some((t, c)) if graph.is_goal(t) => c,
                Some((t, c)) => c + gamma * best[t as usize],
            })
            .collect();
        let delta = max_change(&q, &next);
        q = next;
        if delta < tol {
            return Ok(q);
        }
    }
    Err(Error::NoConvergence(max_sweeps))
}

fn max_change(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| if x == y { 0.0 } else { (x - y).abs() })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 0 ← 1 ← 2 ← … with action 0 stepping towards the goal and action 1 away.
    fn chain(n: u32) -> ExplicitGraph {
        let mut edges = Vec::new();
        for s in 0..n {
            edges.push(Some((s.saturating_sub(1), 1.0)));
            edges.push(Some(((s + 1).min(n - 1), 1.0)));
        }
        ExplicitGraph::new(2, edges, &[0]).unwrap()
    }

    #[test]
    fn single_goal_state_has_zero_cost() {
        let g = ExplicitGraph::new(1, vec![Some((0, 1.0))], &[0]).unwrap();
        assert_eq!(tabular_value_iteration(&g, 1.0, 1e-12, 10).unwrap(), vec![0.0]);
    }

    #[test]
    fn five_state_chain() {
        // Goal at the end: reverse the chain numbering.
        let g = chain(5);
        let j = tabular_value_iteration(&g, 1.0, 1e-12, 100).unwrap();
        let reversed: Vec<f64> = j.iter().rev().copied().collect();
        assert_eq!(reversed, vec![4.0, 3.0, 2.0, 1.0, 0.0]);
    }

    #[test]
    fn q_iteration_is_consistent_with_value_iteration() {
        let g = chain(6);
        let j = tabular_value_iteration(&g, 1.0, 1e-12, 100).unwrap();
        let q = tabular_q_iteration(&g, 1.0, 1e-12, 100).unwrap();
        // Successor is the goal: unit cost.
        assert_eq!(q[2], 1.0);
        for s in 1..6 {
            let row = &q[s * 2..s * 2 + 2];
            assert_eq!(row[0].min(row[1]), j[s]);
        }
        // Greedy rollout over q reaches the goal in j steps.
        for start in 1..6u32 {
            let (mut s, mut steps) = (start, 0);
            while !g.is_goal(s) {
                let row = &q[s as usize * 2..s as usize * 2 + 2];
                let a = if row[1] < row[0] { 1 } else { 0 };
                s = g.successor(s, a).unwrap().0;
                steps += 1;
            }
            assert_eq!(steps as f64, j[start as usize]);
        }
    }

    #[test]
    fn discounting_converges_on_unreachable_states() {
        let edges = vec![Some((0, 1.0)), Some((1, 1.0))];
        let g = ExplicitGraph::new(1, edges, &[0]).unwrap();
        assert!(matches!(tabular_value_iteration(&g, 1.0, 1e-9, 50), Err(Error::NoConvergence(50))));
        let j = tabular_value_iteration(&g, 0.5, 1e-12, 200).unwrap();
        assert!((j[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn missing_edges_make_a_partial_graph() {
        let g = ExplicitGraph::new(2, vec![Some((0, 1.0)), None, Some((0, 1.0)), None], &[0]).unwrap();
        assert!(matches!(g.env(), Err(Error::MissingEdge { state: 0, action: 1 })));
        let q = tabular_q_iteration(&g, 1.0, 1e-12, 10).unwrap();
        assert_eq!(q, vec![1.0, f64::INFINITY, 1.0, f64::INFINITY]);
    }

    #[test]
    fn invalid_graphs_are_rejected() {
        assert!(ExplicitGraph::new(1, vec![Some((3, 1.0))], &[0]).is_err());
        assert!(ExplicitGraph::new(1, vec![Some((0, -1.0))], &[0]).is_err());
        assert!(ExplicitGraph::new(1, vec![Some((0, 1.0))], &[2]).is_err());
    }

    #[test]
    fn corner_graph_is_total_and_connected() {
        let space = ActionSpace::new(PuzzleKind::Cube2, 1).unwrap();
        let g = corner_permutation_graph(&space).unwrap();
        assert_eq!(g.num_states(), 5040);
        assert!(g.env().is_ok());
        let j = tabular_value_iteration(&g, 1.0, 1e-12, 100).unwrap();
        assert!(j.iter().all(|v| v.is_finite()));
    }
}
