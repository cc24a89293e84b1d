use std::fmt;

use super::{BaseMove, PuzzleError, PuzzleKind, PuzzleState};

/// Every action, meta-actions included, costs one.
pub const UNIT_COST: f64 = 1.0;

/// Result of applying one action.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub state: PuzzleState,
    pub cost: f64,
}

/// Ordered list of actions, each a sequence of `1..=max_len` base moves.
///
/// Ordering is part of the network contract (output `i` of a Q-network is the
/// Q-factor of action `i`): all length-1 sequences in base-move order, then
/// length-2 sequences in lexicographic order of base-move indices, and so on.
/// Sequences with redundant effect (e.g. `U U'`) are kept.
#[derive(Clone, PartialEq, Eq)]
pub struct ActionSpace {
    puzzle: PuzzleKind,
    max_len: usize,
    base: Vec<BaseMove>,
    // Flattened move-index sequences; action i is seqs[offsets[i]..offsets[i + 1]].
    seqs: Vec<u8>,
    offsets: Vec<u32>,
}

impl ActionSpace {
    pub fn new(puzzle: PuzzleKind, max_len: usize) -> Result<Self, PuzzleError> {
        if max_len == 0 {
            return Err(PuzzleError::ZeroLength);
        }
        let base = puzzle.base_moves();
        let nb = base.len();
        let mut seqs = Vec::new();
        let mut offsets = vec![0u32];
        for len in 1..=max_len {
            let count = nb.pow(len as u32);
            for code in 0..count {
                // Most significant digit first gives lexicographic order.
                let mut digits = vec![0u8; len];
                let mut c = code;
                for d in digits.iter_mut().rev() {
                    *d = (c % nb) as u8;
                    c /= nb;
                }
                seqs.extend_from_slice(&digits);
                offsets.push(seqs.len() as u32);
            }
        }
        Ok(Self {
            puzzle,
            max_len,
            base,
            seqs,
            offsets,
        })
    }

    /// Parses a puzzle id and builds its action space.
    pub fn build(puzzle: &str, max_len: usize) -> Result<Self, PuzzleError> {
        Self::new(puzzle.parse()?, max_len)
    }

    pub fn puzzle(&self) -> PuzzleKind {
        self.puzzle
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn base_moves(&self) -> &[BaseMove] {
        &self.base
    }

    /// Base-move indices making up action `index`.
    pub fn sequence(&self, index: usize) -> &[u8] {
        let lo = self.offsets[index] as usize;
        let hi = self.offsets[index + 1] as usize;
        &self.seqs[lo..hi]
    }

    pub fn moves(&self, index: usize) -> impl Iterator<Item = BaseMove> + '_ {
        self.sequence(index).iter().map(|&m| self.base[m as usize])
    }

    /// Index of the single-move action for `m`, if `m` belongs to this puzzle.
    pub fn base_action(&self, m: BaseMove) -> Option<usize> {
        self.base.iter().position(|&b| b == m)
    }

    /// Looks up the action whose move sequence is exactly `moves`.
    pub fn find(&self, moves: &[BaseMove]) -> Option<usize> {
        if moves.is_empty() || moves.len() > self.max_len {
            return None;
        }
        let nb = self.base.len();
        let mut index = (1..moves.len()).map(|l| nb.pow(l as u32)).sum::<usize>();
        let mut code = 0;
        for m in moves {
            code = code * nb + self.base_action(*m)?;
        }
        index += code;
        Some(index)
    }

    pub fn cost(&self, _index: usize) -> f64 {
        UNIT_COST
    }

    /// Applies action `index`; the input state is untouched.
    pub fn apply(&self, s: &PuzzleState, index: usize) -> Result<Transition, PuzzleError> {
        if index >= self.len() {
            return Err(PuzzleError::ActionOutOfRange {
                index,
                len: self.len(),
            });
        }
        Ok(Transition {
            state: self.step(s, index),
            cost: UNIT_COST,
        })
    }

    /// Successor state for an in-range action index.
    ///
    /// Panics if `index >= self.len()`.
    #[inline]
    pub fn step(&self, s: &PuzzleState, index: usize) -> PuzzleState {
        let mut out = *s;
        for &m in self.sequence(index) {
            out = self.puzzle.apply_base(&out, self.base[m as usize]);
        }
        out
    }

    pub fn describe(&self, index: usize) -> String {
        self.moves(index)
            .map(|m| m.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Debug for ActionSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ActionSpace")
            .field("puzzle", &self.puzzle)
            .field("max_len", &self.max_len)
            .field("len", &self.len())
            .finish()
    }
}
