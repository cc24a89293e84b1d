//! Deterministic cube environments at the cubie level.
//!
//! Two puzzles are supported: the 2x2x2 (`cube2`, DBL corner pinned, 3,674,160
//! states) and the 3x3x3 (`cube3`). Both share [`PuzzleState`]; on `cube2` the
//! edge arrays stay at identity and only `U`, `R`, `F` turns are available.
//!
//! Scrambles draw each base move uniformly at random and do not avoid
//! immediately undoing the previous move.

mod actions;
mod encode;
mod facelets;
pub mod moves;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use actions::{ActionSpace, Transition, UNIT_COST};
pub use encode::CUBE2_STATES;
pub(crate) use encode::{cube2_rank, cube2_unrank, CUBE2_ORIENTATIONS};
pub use moves::{BaseMove, Face, Turn};

use moves::{DBL, NUM_CORNERS, NUM_EDGES};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PuzzleError {
    #[error("unknown puzzle `{0}` (expected cube2 or cube3)")]
    UnknownPuzzle(String),
    #[error("meta-action length must be at least 1")]
    ZeroLength,
    #[error("action index {index} out of range for an action space of {len}")]
    ActionOutOfRange { index: usize, len: usize },
    #[error("{0} is not supported for {1}")]
    Unsupported(&'static str, PuzzleKind),
    #[error("state is not a valid {0} configuration")]
    InvalidState(PuzzleKind),
    #[error("rank {0} out of range")]
    RankOutOfRange(u64),
    #[error("`{0}` is not a {1} move")]
    BadMove(String, PuzzleKind),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PuzzleKind {
    Cube2,
    Cube3,
}

impl PuzzleKind {
    pub fn base_moves(self) -> Vec<BaseMove> {
        match self {
            PuzzleKind::Cube2 => moves::cube2_moves(),
            PuzzleKind::Cube3 => moves::cube3_moves(),
        }
    }

    pub fn num_base_moves(self) -> usize {
        match self {
            PuzzleKind::Cube2 => 6,
            PuzzleKind::Cube3 => 12,
        }
    }

    /// Number of cubies that carry a one-hot block in the encoding.
    pub fn num_cubies(self) -> usize {
        match self {
            PuzzleKind::Cube2 => NUM_CORNERS,
            PuzzleKind::Cube3 => NUM_CORNERS + NUM_EDGES,
        }
    }

    pub fn apply_base(self, s: &PuzzleState, m: BaseMove) -> PuzzleState {
        match self {
            PuzzleKind::Cube2 => s.compose_corners(m.table()),
            PuzzleKind::Cube3 => s.compose(m.table()),
        }
    }

    /// Parses whitespace-separated moves such as `U R' F2`. A `2` suffix
    /// expands to two quarter turns.
    pub fn parse_moves(self, text: &str) -> Result<Vec<BaseMove>, PuzzleError> {
        let allowed = self.base_moves();
        let mut out = Vec::new();
        for tok in text.split_whitespace() {
            let bad = || PuzzleError::BadMove(tok.to_string(), self);
            let mut chars = tok.chars();
            let face = chars
                .next()
                .and_then(|c| Face::ALL.into_iter().find(|f| f.letter() == c))
                .ok_or_else(bad)?;
            let (turn, reps) = match chars.as_str() {
                "" => (Turn::Clockwise, 1),
                "'" => (Turn::CounterClockwise, 1),
                "2" => (Turn::Clockwise, 2),
                _ => return Err(bad()),
            };
            let m = BaseMove::new(face, turn);
            if !allowed.contains(&m) {
                return Err(bad());
            }
            out.extend(std::iter::repeat_n(m, reps));
        }
        Ok(out)
    }

    /// Applies `moves` in order to the goal.
    pub fn apply_moves(self, moves: &[BaseMove]) -> PuzzleState {
        moves.iter().fold(PuzzleState::GOAL, |s, &m| self.apply_base(&s, m))
    }

    /// Applies `depth` uniformly random base moves to the goal.
    pub fn scramble<R: Rng + ?Sized>(self, depth: usize, rng: &mut R) -> PuzzleState {
        let moves = self.base_moves();
        let mut s = PuzzleState::GOAL;
        for _ in 0..depth {
            let m = moves[rng.random_range(0..moves.len())];
            s = self.apply_base(&s, m);
        }
        s
    }

    /// `count` states, each scrambled with a depth drawn uniformly from `0..=max_depth`.
    pub fn sample_training_states<R: Rng + ?Sized>(
        self,
        count: usize,
        max_depth: usize,
        rng: &mut R,
    ) -> Vec<(PuzzleState, usize)> {
        (0..count)
            .map(|_| {
                let depth = rng.random_range(0..=max_depth);
                (self.scramble(depth, rng), depth)
            })
            .collect()
    }

    /// Checks the group invariants a state reachable from the goal must satisfy.
    pub fn is_valid(self, s: &PuzzleState) -> bool {
        if !is_permutation(&s.corner_perm) || !is_permutation(&s.edge_perm) {
            return false;
        }
        if s.corner_ori.iter().any(|&o| o > 2) || s.edge_ori.iter().any(|&o| o > 1) {
            return false;
        }
        let corner_twist: u32 = s.corner_ori.iter().map(|&o| o as u32).sum();
        let edge_flip: u32 = s.edge_ori.iter().map(|&o| o as u32).sum();
        if corner_twist % 3 != 0 || edge_flip % 2 != 0 {
            return false;
        }
        match self {
            PuzzleKind::Cube2 => {
                s.corner_perm[DBL] == DBL as u8
                    && s.corner_ori[DBL] == 0
                    && s.edge_perm == PuzzleState::GOAL.edge_perm
                    && s.edge_ori == [0; NUM_EDGES]
            }
            PuzzleKind::Cube3 => {
                permutation_parity(&s.corner_perm) == permutation_parity(&s.edge_perm)
            }
        }
    }
}

impl fmt::Display for PuzzleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PuzzleKind::Cube2 => "cube2",
            PuzzleKind::Cube3 => "cube3",
        })
    }
}

impl FromStr for PuzzleKind {
    type Err = PuzzleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cube2" => Ok(PuzzleKind::Cube2),
            "cube3" => Ok(PuzzleKind::Cube3),
            other => Err(PuzzleError::UnknownPuzzle(other.to_string())),
        }
    }
}

/// An exact cube configuration.
///
/// Slot `i` holds corner `corner_perm[i]` twisted by `corner_ori[i]` (and
/// likewise for edges). The solved cube is the identity.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PuzzleState {
    pub corner_perm: [u8; NUM_CORNERS],
    pub corner_ori: [u8; NUM_CORNERS],
    pub edge_perm: [u8; NUM_EDGES],
    pub edge_ori: [u8; NUM_EDGES],
}

impl PuzzleState {
    pub const GOAL: PuzzleState = PuzzleState {
        corner_perm: [0, 1, 2, 3, 4, 5, 6, 7],
        corner_ori: [0; NUM_CORNERS],
        edge_perm: [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11],
        edge_ori: [0; NUM_EDGES],
    };

    pub fn is_goal(&self) -> bool {
        *self == Self::GOAL
    }

    /// `self` followed by `m`.
    pub fn compose(&self, m: &PuzzleState) -> PuzzleState {
        let mut out = self.compose_corners(m);
        for i in 0..NUM_EDGES {
            let from = m.edge_perm[i] as usize;
            out.edge_perm[i] = self.edge_perm[from];
            out.edge_ori[i] = (self.edge_ori[from] + m.edge_ori[i]) & 1;
        }
        out
    }

    /// Like [`compose`](Self::compose) but leaves the edges untouched.
    pub fn compose_corners(&self, m: &PuzzleState) -> PuzzleState {
        let mut out = *self;
        for i in 0..NUM_CORNERS {
            let from = m.corner_perm[i] as usize;
            out.corner_perm[i] = self.corner_perm[from];
            let o = self.corner_ori[from] + m.corner_ori[i];
            out.corner_ori[i] = if o >= 3 { o - 3 } else { o };
        }
        out
    }
}

impl Default for PuzzleState {
    fn default() -> Self {
        Self::GOAL
    }
}

impl fmt::Debug for PuzzleState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "PuzzleState {{ cp: {:?}, co: {:?}, ep: {:?}, eo: {:?} }}",
            self.corner_perm, self.corner_ori, self.edge_perm, self.edge_ori
        )
    }
}

fn is_permutation(p: &[u8]) -> bool {
    let mut seen = 0u32;
    for &x in p {
        if x as usize >= p.len() || seen & (1 << x) != 0 {
            return false;
        }
        seen |= 1 << x;
    }
    true
}

fn permutation_parity(p: &[u8]) -> u32 {
    let mut inversions = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                inversions += 1;
            }
        }
    }
    inversions & 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn quarter_turns_have_order_four() {
        for kind in [PuzzleKind::Cube2, PuzzleKind::Cube3] {
            for m in kind.base_moves() {
                let mut s = PuzzleState::GOAL;
                for step in 1..=4 {
                    s = kind.apply_base(&s, m);
                    assert_eq!(s.is_goal(), step == 4, "{m} on {kind}");
                }
            }
        }
    }

    #[test]
    fn move_sequences_parse() {
        let k = PuzzleKind::Cube2;
        let ms = k.parse_moves(" U R'  F2\n").unwrap();
        assert_eq!(ms.len(), 4);
        assert_eq!(ms[1], BaseMove::new(Face::R, Turn::CounterClockwise));
        assert_eq!(ms.iter().map(|m| m.to_string()).collect::<Vec<_>>(), ["U", "R'", "F", "F"]);
        assert!(k.parse_moves("").unwrap().is_empty());
        assert!(matches!(k.parse_moves("D"), Err(PuzzleError::BadMove(..))));
        assert!(k.parse_moves("U3").is_err());
        assert!(k.parse_moves("x").is_err());
        assert_eq!(PuzzleKind::Cube3.parse_moves("D B'").unwrap().len(), 2);
        let s = k.apply_moves(&k.parse_moves("U U'").unwrap());
        assert!(s.is_goal());
    }

    #[test]
    fn move_then_inverse_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for kind in [PuzzleKind::Cube2, PuzzleKind::Cube3] {
            let s = kind.scramble(20, &mut rng);
            for m in kind.base_moves() {
                let back = kind.apply_base(&kind.apply_base(&s, m), m.inverse());
                assert_eq!(back, s);
            }
        }
    }

    #[test]
    fn sexy_move_has_order_six() {
        let k = PuzzleKind::Cube3;
        let r = BaseMove::new(Face::R, Turn::Clockwise);
        let u = BaseMove::new(Face::U, Turn::Clockwise);
        let seq = [r, u, r.inverse(), u.inverse()];
        let mut s = PuzzleState::GOAL;
        for rep in 1..=6 {
            for &m in &seq {
                s = k.apply_base(&s, m);
            }
            assert_eq!(s.is_goal(), rep == 6);
        }
    }

    #[test]
    fn scrambles_keep_group_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for kind in [PuzzleKind::Cube2, PuzzleKind::Cube3] {
            for depth in 0..40 {
                let s = kind.scramble(depth, &mut rng);
                assert!(kind.is_valid(&s), "{kind} depth {depth}: {s:?}");
            }
        }
    }

    #[test]
    fn cube2_never_moves_edges_or_dbl() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = PuzzleKind::Cube2.scramble(100, &mut rng);
        assert_eq!(s.edge_perm, PuzzleState::GOAL.edge_perm);
        assert_eq!(s.corner_perm[DBL], DBL as u8);
        assert_eq!(s.corner_ori[DBL], 0);
    }

    #[test]
    fn scramble_zero_is_goal_and_one_is_a_neighbor() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for kind in [PuzzleKind::Cube2, PuzzleKind::Cube3] {
            assert!(kind.scramble(0, &mut rng).is_goal());
            let neighbors: Vec<_> = kind
                .base_moves()
                .into_iter()
                .map(|m| kind.apply_base(&PuzzleState::GOAL, m))
                .collect();
            for _ in 0..50 {
                assert!(neighbors.contains(&kind.scramble(1, &mut rng)));
            }
        }
    }

    #[test]
    fn depth_zero_training_states_are_goal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let states = PuzzleKind::Cube3.sample_training_states(100, 0, &mut rng);
        assert!(states.iter().all(|(s, d)| s.is_goal() && *d == 0));
    }

    #[test]
    fn puzzle_ids_parse() {
        assert_eq!("cube2".parse::<PuzzleKind>(), Ok(PuzzleKind::Cube2));
        assert_eq!("cube3".parse::<PuzzleKind>(), Ok(PuzzleKind::Cube3));
        assert!(matches!(
            "cube4".parse::<PuzzleKind>(),
            Err(PuzzleError::UnknownPuzzle(_))
        ));
    }
}
