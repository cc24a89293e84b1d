//! Exact cost-to-go: exhaustive BFS on the 2x2x2, tabular value and Q
//! iteration on explicit graphs, and adapters that expose the results as
//! cost models.

mod coords;
mod graph;
mod table;

use crate::error::{Error, Result};
use crate::model::CostModel;
use crate::puzzle::{ActionSpace, PuzzleError, PuzzleKind, PuzzleState, CUBE2_STATES};

use coords::CUBE2_COORDS;

pub use graph::{
    corner_permutation_graph, induced_subgraph, tabular_q_iteration, tabular_value_iteration, ExplicitGraph,
    GraphEnv,
};
pub use table::{cache_path, decode_table, encode_table, load_or_build, load_table, save_table, space_descriptor};

pub const UNREACHED: u8 = u8::MAX;

/// Shortest distance to the goal for every 2x2x2 state, indexed by rank.
#[derive(Clone, PartialEq, Eq)]
pub struct DistanceTable {
    puzzle: PuzzleKind,
    max_len: usize,
    num_actions: usize,
    digest: [u8; 32],
    dist: Vec<u8>,
}

impl std::fmt::Debug for DistanceTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DistanceTable")
            .field("puzzle", &self.puzzle)
            .field("max_len", &self.max_len)
            .field("states", &self.dist.len())
            .finish()
    }
}

impl DistanceTable {
    pub fn puzzle(&self) -> PuzzleKind {
        self.puzzle
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.dist
    }

    /// True if the table was built for exactly this action space.
    pub fn matches(&self, space: &ActionSpace) -> bool {
        self.puzzle == space.puzzle()
            && self.max_len == space.max_len()
            && self.num_actions == space.len()
            && self.digest == table::space_digest(space)
            && self.dist.len() == CUBE2_STATES
    }

    pub fn distance_of_rank(&self, rank: u32) -> Option<u8> {
        self.dist.get(rank as usize).copied().filter(|&d| d != UNREACHED)
    }

    pub fn distance(&self, s: &PuzzleState) -> Result<u8> {
        let rank = self.puzzle.rank(s)?;
        self.distance_of_rank(rank).ok_or(Error::Uncovered)
    }

    pub fn visited(&self) -> usize {
        self.dist.iter().filter(|&&d| d != UNREACHED).count()
    }

    pub fn max_distance(&self) -> u8 {
        self.dist.iter().copied().filter(|&d| d != UNREACHED).max().unwrap_or(0)
    }

    /// `histogram()[d]` = number of states at distance `d`.
    pub fn histogram(&self) -> Vec<u64> {
        let mut h = vec![0u64; self.max_distance() as usize + 1];
        for &d in &self.dist {
            if d != UNREACHED {
                h[d as usize] += 1;
            }
        }
        h
    }
}

/// Layered breadth-first search from the goal over every 2x2x2 state.
///
/// Every action space here contains the inverse of each of its actions, so
/// distance from the goal equals distance to it.
pub fn bfs_distances(space: &ActionSpace) -> Result<DistanceTable> {
    if space.puzzle() != PuzzleKind::Cube2 {
        return Err(PuzzleError::Unsupported("exhaustive BFS", space.puzzle()).into());
    }
    let seqs: Vec<&[u8]> = (0..space.len()).map(|a| space.sequence(a)).collect();
    let mut dist = vec![UNREACHED; CUBE2_STATES];
    dist[0] = 0;
    let mut depth = 0u8;
    let mut frontier = 1usize;
    while frontier > 0 {
        if depth == UNREACHED - 1 {
            return Err(Error::Internal("BFS depth overflow".into()));
        }
        frontier = 0;
        for rank in 0..CUBE2_STATES {
            if dist[rank] != depth {
                continue;
            }
            for seq in &seqs {
                let child = CUBE2_COORDS.apply(rank as u32, seq) as usize;
                if dist[child] == UNREACHED {
                    dist[child] = depth + 1;
                    frontier += 1;
                }
            }
        }
        depth += 1;
    }
    Ok(DistanceTable {
        puzzle: space.puzzle(),
        max_len: space.max_len(),
        num_actions: space.len(),
        digest: table::space_digest(space),
        dist,
    })
}

/// `h(s) = d(s)` from a distance table.
#[derive(Clone, Copy, Debug)]
pub struct ExactHeuristic<'a> {
    table: &'a DistanceTable,
}

impl<'a> ExactHeuristic<'a> {
    pub fn new(table: &'a DistanceTable) -> Self {
        Self { table }
    }
}

impl CostModel<PuzzleState> for ExactHeuristic<'_> {
    fn output_dim(&self) -> usize {
        1
    }

    fn predict(&self, states: &[PuzzleState]) -> Result<Vec<f64>> {
        states.iter().map(|s| Ok(self.table.distance(s)? as f64)).collect()
    }
}

/// `q(s, a) = cost(a) + d(A(s, a))`, which is `cost(a)` when `A(s, a)` is the goal.
#[derive(Clone, Copy, Debug)]
pub struct ExactDqn<'a> {
    table: &'a DistanceTable,
    space: &'a ActionSpace,
}

impl<'a> ExactDqn<'a> {
    pub fn new(table: &'a DistanceTable, space: &'a ActionSpace) -> Result<Self> {
        if !table.matches(space) {
            return Err(Error::Config(format!(
                "distance table was built for L={}, not for this action space",
                table.max_len
            )));
        }
        Ok(Self { table, space })
    }
}

impl CostModel<PuzzleState> for ExactDqn<'_> {
    fn output_dim(&self) -> usize {
        self.space.len()
    }

    fn predict(&self, states: &[PuzzleState]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(states.len() * self.space.len());
        for s in states {
            let rank = self.table.puzzle.rank(s)?;
            for a in 0..self.space.len() {
                let child = CUBE2_COORDS.apply(rank, self.space.sequence(a));
                let d = self.table.distance_of_rank(child).ok_or(Error::Uncovered)?;
                out.push(self.space.cost(a) + d as f64);
            }
        }
        Ok(out)
    }
}
