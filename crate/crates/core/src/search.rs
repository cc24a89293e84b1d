//! Batch-weighted A* over nodes and AQ* over (node, action) pairs.
//!
//! Both searches keep OPEN as a binary heap ordered by queue cost, then
//! insertion order, and CLOSED as a map from state to the best path cost
//! seen. Each iteration pops up to `batch_size` entries and makes a single
//! call to the cost model.
//!
//! Queue costs are `λ·g′ + h(s′)` for A* and `λ·g′ + q(s′, a′)` for AQ*. In
//! the latter the transition cost inside `q` is not weighted by `λ`.
//!
//! Entries whose node has since been reached more cheaply are skipped when
//! popped (`stale_pops`). The start node is never sent to the heuristic: it
//! is alone in OPEN, so its queue cost cannot affect the order.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CostModel, Environment};

/// Action placeholder for the start entry of AQ*.
pub const NO_OP: u32 = u32::MAX;
const NO_PARENT: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Weight on path cost, in `[0, 1]`.
    pub lambda: f64,
    /// Entries popped per iteration.
    pub batch_size: usize,
    /// Stop once this many nodes have been generated.
    pub max_nodes: u64,
    /// Stop once OPEN holds this many entries.
    pub max_open: u64,
    pub time_limit_s: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            batch_size: 1,
            max_nodes: 10_000_000,
            max_open: 50_000_000,
            time_limit_s: 600.0,
        }
    }
}

impl SearchConfig {
    pub fn new(lambda: f64, batch_size: usize) -> Self {
        Self {
            lambda,
            batch_size,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Config(format!("lambda must be in [0, 1], got {}", self.lambda)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(self.time_limit_s > 0.0) {
            return Err(Error::Config("time limit must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    /// A*: children created, CLOSED skips included. AQ*: surviving successors.
    pub nodes_generated: u64,
    pub node_actions_pushed: u64,
    pub heuristic_forward_passes: u64,
    pub heuristic_states_evaluated: u64,
    pub pops: u64,
    /// A* nodes whose children were generated.
    pub expansions: u64,
    /// Popped entries that were processed: expanded (A*) or evaluated (AQ*).
    pub surviving_pops: u64,
    pub closed_size: u64,
    /// Successors dropped because CLOSED already held an equal or cheaper path.
    pub closed_skips: u64,
    /// Popped entries superseded by a cheaper path to the same state.
    pub stale_pops: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Solved,
    /// OPEN ran empty without reaching a goal.
    Exhausted,
    /// A node, queue or time budget ran out.
    Budget,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub outcome: Outcome,
    /// Action indices from the start to the goal (empty unless solved).
    pub solution: Vec<usize>,
    pub path_cost: f64,
    pub counters: Counters,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug)]
pub struct SearchNode<S> {
    pub state: S,
    pub g: f64,
    pub parent: u32,
    pub action: u32,
}

/// OPEN entry: a node and, for AQ*, the action still to be applied to it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeAction {
    pub node: u32,
    pub action: u32,
    pub cost: f64,
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    item: NodeAction,
    seq: u64,
}

impl PartialEq for Entry {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Entry {
    // Reversed so the max-heap yields the cheapest, then the oldest, entry.
    fn cmp(&self, o: &Self) -> Ordering {
        o.item.cost.total_cmp(&self.item.cost).then(o.seq.cmp(&self.seq))
    }
}

/// Action indices from the root to `node`, followed by `final_action`.
pub fn path_to_goal<S>(nodes: &[SearchNode<S>], node: u32, final_action: Option<usize>) -> Result<Vec<usize>> {
    let mut path = Vec::new();
    let mut at = node;
    while at != NO_PARENT {
        let n = nodes
            .get(at as usize)
            .ok_or_else(|| Error::Internal(format!("broken parent chain at node {at}")))?;
        if n.parent != NO_PARENT {
            path.push(n.action as usize);
        }
        if path.len() > nodes.len() {
            return Err(Error::Internal("cycle in parent chain".into()));
        }
        at = n.parent;
    }
    path.reverse();
    path.extend(final_action);
    Ok(path)
}

/// Replays `solution` from `start`; returns its cost if it ends at a goal.
pub fn replay<E: Environment>(env: &E, start: &E::State, solution: &[usize]) -> Result<f64> {
    let mut s = start.clone();
    let mut cost = 0.0;
    for &a in solution {
        if a >= env.num_actions() {
            return Err(Error::Internal(format!("solution uses unknown action {a}")));
        }
        let (next, c) = env.step(&s, a);
        s = next;
        cost += c;
    }
    if !env.is_goal(&s) {
        return Err(Error::Internal("solution does not reach the goal".into()));
    }
    Ok(cost)
}

struct Search<'e, E: Environment> {
    env: &'e E,
    cfg: SearchConfig,
    start: E::State,
    nodes: Vec<SearchNode<E::State>>,
    closed: FxHashMap<E::State, f64>,
    open: BinaryHeap<Entry>,
    seq: u64,
    counters: Counters,
    clock: Instant,
}

impl<'e, E: Environment> Search<'e, E> {
    fn new(env: &'e E, start: &E::State, cfg: SearchConfig) -> Result<Self> {
        cfg.validate()?;
        let mut s = Self {
            env,
            cfg,
            start: start.clone(),
            nodes: vec![SearchNode {
                state: start.clone(),
                g: 0.0,
                parent: NO_PARENT,
                action: NO_OP,
            }],
            closed: FxHashMap::default(),
            open: BinaryHeap::new(),
            seq: 0,
            counters: Counters::default(),
            clock: Instant::now(),
        };
        s.push(0, NO_OP, 0.0);
        Ok(s)
    }

    fn push(&mut self, node: u32, action: u32, cost: f64) {
        self.open.push(Entry {
            item: NodeAction { node, action, cost },
            seq: self.seq,
        });
        self.seq += 1;
    }

    fn add_node(&mut self, state: E::State, g: f64, parent: u32, action: usize) -> u32 {
        self.nodes.push(SearchNode {
            state,
            g,
            parent,
            action: action as u32,
        });
        (self.nodes.len() - 1) as u32
    }

    fn over_budget(&self) -> bool {
        self.counters.nodes_generated >= self.cfg.max_nodes
            || self.open.len() as u64 >= self.cfg.max_open
            || self.clock.elapsed().as_secs_f64() >= self.cfg.time_limit_s
    }

    /// Pops up to `batch_size` live entries.
    fn pop_batch(&mut self) -> Vec<NodeAction> {
        let mut batch = Vec::with_capacity(self.cfg.batch_size);
        while batch.len() < self.cfg.batch_size {
            let Some(e) = self.open.pop() else { break };
            self.counters.pops += 1;
            let n = &self.nodes[e.item.node as usize];
            if self.closed.get(&n.state).is_some_and(|&g| g < n.g) {
                self.counters.stale_pops += 1;
                continue;
            }
            batch.push(e.item);
        }
        batch
    }

    /// True if `state` at cost `g` improves on CLOSED, which is then updated.
    fn improve(&mut self, state: &E::State, g: f64) -> bool {
        match self.closed.get(state) {
            Some(&old) if old <= g => {
                self.counters.closed_skips += 1;
                false
            }
            _ => {
                self.closed.insert(state.clone(), g);
                true
            }
        }
    }

    fn evaluate<M: CostModel<E::State> + ?Sized>(&mut self, model: &M, ids: &[u32]) -> Result<Vec<f64>> {
        let states: Vec<E::State> = ids.iter().map(|&i| self.nodes[i as usize].state.clone()).collect();
        let out = model.predict(&states)?;
        if out.len() != ids.len() * model.output_dim() {
            return Err(Error::Width {
                expected: ids.len() * model.output_dim(),
                got: out.len(),
            });
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("heuristic values"));
        }
        self.counters.heuristic_forward_passes += 1;
        self.counters.heuristic_states_evaluated += ids.len() as u64;
        Ok(out)
    }

    fn finish(mut self, outcome: Outcome, solution: Vec<usize>) -> Result<SearchResult> {
        self.counters.closed_size = self.closed.len() as u64;
        let path_cost = if outcome == Outcome::Solved {
            replay(self.env, &self.start, &solution)?
        } else {
            0.0
        };
        Ok(SearchResult {
            outcome,
            solution,
            path_cost,
            counters: self.counters,
            wall_time_s: self.clock.elapsed().as_secs_f64(),
        })
    }
}

fn check_width<S, M: CostModel<S> + ?Sized>(model: &M, expected: usize) -> Result<()> {
    if model.output_dim() != expected {
        return Err(Error::Width {
            expected,
            got: model.output_dim(),
        });
    }
    Ok(())
}

/// Batch-weighted A*: goal test on pop, full expansion of every popped node,
/// one heuristic call for all new children of the batch.
pub fn astar<E, H>(env: &E, start: &E::State, heuristic: &H, cfg: &SearchConfig) -> Result<SearchResult>
where
    E: Environment,
    H: CostModel<E::State> + ?Sized,
{
    check_width(heuristic, 1)?;
    let mut s = Search::new(env, start, *cfg)?;
    s.closed.insert(start.clone(), 0.0);
    let na = env.num_actions();
    loop {
        if s.open.is_empty() {
            return s.finish(Outcome::Exhausted, vec![]);
        }
        if s.over_budget() {
            return s.finish(Outcome::Budget, vec![]);
        }
        let batch = s.pop_batch();
        let goal = batch
            .iter()
            .filter(|e| env.is_goal(&s.nodes[e.node as usize].state))
            .min_by(|a, b| s.nodes[a.node as usize].g.total_cmp(&s.nodes[b.node as usize].g));
        if let Some(e) = goal {
            let path = path_to_goal(&s.nodes, e.node, None)?;
            return s.finish(Outcome::Solved, path);
        }

        let mut fresh = Vec::new();
        for e in &batch {
            s.counters.expansions += 1;
            s.counters.surviving_pops += 1;
            let (state, g) = {
                let n = &s.nodes[e.node as usize];
                (n.state.clone(), n.g)
            };
            for a in 0..na {
                let (child, cost) = env.step(&state, a);
                let g2 = g + cost;
                s.counters.nodes_generated += 1;
                if s.improve(&child, g2) {
                    fresh.push(s.add_node(child, g2, e.node, a));
                }
            }
        }
        if fresh.is_empty() {
            continue;
        }
        let h = s.evaluate(heuristic, &fresh)?;
        for (&id, h) in fresh.iter().zip(h) {
            let g = s.nodes[id as usize].g;
            s.push(id, NO_OP, s.cfg.lambda * g + h);
            s.counters.node_actions_pushed += 1;
        }
    }
}

/// AQ*: OPEN holds (node, action) pairs. Popping applies the action, tests
/// the successor for the goal, and evaluates the Q-model once per surviving
/// successor, pushing one entry per action without generating children.
pub fn aqstar<E, Q>(env: &E, start: &E::State, dqn: &Q, cfg: &SearchConfig) -> Result<SearchResult>
where
    E: Environment,
    Q: CostModel<E::State> + ?Sized,
{
    let na = env.num_actions();
    check_width(dqn, na)?;
    let mut s = Search::new(env, start, *cfg)?;
    loop {
        if s.open.is_empty() {
            return s.finish(Outcome::Exhausted, vec![]);
        }
        if s.over_budget() {
            return s.finish(Outcome::Budget, vec![]);
        }
        let batch = s.pop_batch();

        // Successor of each popped pair; the start entry maps to the start node.
        let succ: Vec<(E::State, f64)> = batch
            .iter()
            .map(|e| {
                let n = &s.nodes[e.node as usize];
                if e.action == NO_OP {
                    (n.state.clone(), n.g)
                } else {
                    let (c, cost) = env.step(&n.state, e.action as usize);
                    (c, n.g + cost)
                }
            })
            .collect();
        let goal = (0..batch.len())
            .filter(|&i| env.is_goal(&succ[i].0))
            .min_by(|&a, &b| succ[a].1.total_cmp(&succ[b].1));
        if let Some(i) = goal {
            let e = batch[i];
            let last = (e.action != NO_OP).then_some(e.action as usize);
            let path = path_to_goal(&s.nodes, e.node, last)?;
            return s.finish(Outcome::Solved, path);
        }

        let mut fresh = Vec::new();
        for (e, (state, g)) in batch.iter().zip(succ) {
            if !s.improve(&state, g) {
                continue;
            }
            s.counters.surviving_pops += 1;
            s.counters.nodes_generated += 1;
            let id = if e.action == NO_OP {
                e.node
            } else {
                s.add_node(state, g, e.node, e.action as usize)
            };
            fresh.push(id);
        }
        if fresh.is_empty() {
            continue;
        }
        let q = s.evaluate(dqn, &fresh)?;
        for (&id, row) in fresh.iter().zip(q.chunks(na)) {
            let base = s.cfg.lambda * s.nodes[id as usize].g;
            for (a, &v) in row.iter().enumerate() {
                s.push(id, a as u32, base + v);
            }
            s.counters.node_actions_pushed += na as u64;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Astar,
    Aqstar,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Astar => "astar",
            Method::Aqstar => "aqstar",
        })
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "astar" => Ok(Method::Astar),
            "aqstar" => Ok(Method::Aqstar),
            _ => Err(Error::Config(format!("unknown method `{s}` (expected astar or aqstar)"))),
        }
    }
}

/// A search method bound to an environment and a cost model of matching width.
pub struct Solver<'a, E: Environment> {
    env: &'a E,
    model: &'a dyn CostModel<E::State>,
    method: Method,
}

impl<'a, E: Environment> Solver<'a, E> {
    pub fn new(env: &'a E, model: &'a dyn CostModel<E::State>, method: Method) -> Result<Self> {
        let expected = match method {
            Method::Astar => 1,
            Method::Aqstar => env.num_actions(),
        };
        check_width(model, expected)?;
        Ok(Self { env, model, method })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn solve(&self, start: &E::State, cfg: &SearchConfig) -> Result<SearchResult> {
        match self.method {
            Method::Astar => astar(self.env, start, self.model, cfg),
            Method::Aqstar => aqstar(self.env, start, self.model, cfg),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{QFromHeuristic, ZeroHeuristic};
    use crate::oracle::ExplicitGraph;
    use crate::puzzle::{ActionSpace, PuzzleKind, PuzzleState};

    fn chain(n: u32) -> ExplicitGraph {
        let mut edges = Vec::new();
        for s in 0..n {
            edges.push(Some((s.saturating_sub(1), 1.0)));
            edges.push(Some(((s + 1).min(n - 1), 1.0)));
        }
        ExplicitGraph::new(2, edges, &[0]).unwrap()
    }

    #[test]
    fn node_action_size_does_not_depend_on_the_state() {
        assert_eq!(std::mem::size_of::<NodeAction>(), 16);
        assert_eq!(std::mem::size_of::<Entry>(), 24);
    }

    #[test]
    fn heap_orders_by_cost_then_fifo() {
        let mut h = BinaryHeap::new();
        for (seq, cost) in [(0, 2.0), (1, 1.0), (2, 1.0), (3, 0.5)] {
            h.push(Entry {
                item: NodeAction {
                    node: seq as u32,
                    action: 0,
                    cost,
                },
                seq,
            });
        }
        let order: Vec<u32> = std::iter::from_fn(|| h.pop().map(|e| e.item.node)).collect();
        assert_eq!(order, vec![3, 1, 2, 0]);
    }

    #[test]
    fn start_at_goal() {
        let space = ActionSpace::new(PuzzleKind::Cube2, 1).unwrap();
        let cfg = SearchConfig::default();
        let r = astar(&space, &PuzzleState::GOAL, &ZeroHeuristic, &cfg).unwrap();
        assert_eq!((r.outcome, r.solution.len(), r.path_cost), (Outcome::Solved, 0, 0.0));
        assert_eq!(r.counters.nodes_generated, 0);
        let q = QFromHeuristic::new(&space, ZeroHeuristic);
        let r = aqstar(&space, &PuzzleState::GOAL, &q, &cfg).unwrap();
        assert_eq!((r.outcome, r.solution.len()), (Outcome::Solved, 0));
        assert!(r.counters.nodes_generated <= 1);
    }

    #[test]
    fn single_move_scramble() {
        let space = ActionSpace::new(PuzzleKind::Cube2, 1).unwrap();
        let start = space.step(&PuzzleState::GOAL, 2);
        let cfg = SearchConfig::default();
        let r = astar(&space, &start, &ZeroHeuristic, &cfg).unwrap();
        assert_eq!(r.solution, vec![3]);
        let q = QFromHeuristic::new(&space, ZeroHeuristic);
        let r = aqstar(&space, &start, &q, &cfg).unwrap();
        assert_eq!(r.solution, vec![3]);
        assert_eq!(r.path_cost, 1.0);
    }

    #[test]
    fn unreachable_goal_exhausts() {
        // Two components: {0} (goal) and {1, 2}.
        let edges = vec![Some((0, 1.0)), Some((2, 1.0)), Some((1, 1.0))];
        let g = ExplicitGraph::new(1, edges, &[0]).unwrap();
        let env = g.env().unwrap();
        let cfg = SearchConfig::default();
        assert_eq!(astar(&env, &1, &ZeroHeuristic, &cfg).unwrap().outcome, Outcome::Exhausted);
        let q = QFromHeuristic::new(&env, ZeroHeuristic);
        assert_eq!(aqstar(&env, &1, &q, &cfg).unwrap().outcome, Outcome::Exhausted);
    }

    #[test]
    fn node_budget_stops_search() {
        let g = chain(50);
        let env = g.env().unwrap();
        let cfg = SearchConfig {
            max_nodes: 10,
            ..SearchConfig::default()
        };
        let r = astar(&env, &49, &ZeroHeuristic, &cfg).unwrap();
        assert_eq!(r.outcome, Outcome::Budget);
        assert!(r.solution.is_empty());
    }

    #[test]
    fn chain_counters() {
        let g = chain(6);
        let env = g.env().unwrap();
        let cfg = SearchConfig::default();
        let r = astar(&env, &5, &ZeroHeuristic, &cfg).unwrap();
        assert_eq!(r.solution, vec![0; 5]);
        let c = r.counters;
        assert_eq!(c.heuristic_states_evaluated, c.nodes_generated - c.closed_skips);
        assert_eq!(c.nodes_generated, 2 * c.expansions);

        let q = QFromHeuristic::new(&env, ZeroHeuristic);
        let r = aqstar(&env, &5, &q, &cfg).unwrap();
        assert_eq!(r.path_cost, 5.0);
        let c = r.counters;
        assert_eq!(c.heuristic_states_evaluated, c.nodes_generated);
        assert_eq!(c.nodes_generated, c.surviving_pops);
        assert_eq!(c.node_actions_pushed, 2 * c.nodes_generated);
    }

    #[test]
    fn broken_parent_chain_is_an_error() {
        let nodes = vec![SearchNode {
            state: 0u32,
            g: 0.0,
            parent: 7,
            action: 0,
        }];
        assert!(path_to_goal(&nodes, 0, None).is_err());
        assert_eq!(path_to_goal::<u32>(&[], NO_PARENT, Some(3)).unwrap(), vec![3]);
    }

    #[test]
    fn invalid_configs_and_widths() {
        let space = ActionSpace::new(PuzzleKind::Cube2, 1).unwrap();
        let s = PuzzleState::GOAL;
        assert!(astar(&space, &s, &ZeroHeuristic, &SearchConfig::new(1.5, 1)).is_err());
        assert!(astar(&space, &s, &ZeroHeuristic, &SearchConfig::new(1.0, 0)).is_err());
        assert!(matches!(
            aqstar(&space, &s, &ZeroHeuristic, &SearchConfig::default()),
            Err(Error::Width { expected: 6, got: 1 })
        ));
        assert!(Solver::new(&space, &ZeroHeuristic, Method::Aqstar).is_err());
        assert_eq!("aqstar".parse::<Method>().unwrap(), Method::Aqstar);
    }

    #[test]
    fn results_serialize_to_json() {
        let space = ActionSpace::new(PuzzleKind::Cube2, 1).unwrap();
        let start = space.step(&PuzzleState::GOAL, 0);
        let r = astar(&space, &start, &ZeroHeuristic, &SearchConfig::default()).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["outcome"], "solved");
        assert_eq!(v["solution"], serde_json::json!([1]));
        assert!(v["counters"]["nodes_generated"].as_u64().unwrap() > 0);
    }
}
