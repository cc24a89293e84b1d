//! Network input encoding and the 2x2x2 perfect rank.

use super::moves::{DBL, NUM_CORNERS, NUM_EDGES};
use super::{PuzzleError, PuzzleKind, PuzzleState};

/// Number of 2x2x2 states with the DBL corner pinned: 7! * 3^6.
pub const CUBE2_STATES: usize = 3_674_160;

const CORNER_BLOCK: usize = NUM_CORNERS * 3;
const EDGE_BLOCK: usize = NUM_EDGES * 2;

// Slots whose contents vary on the pinned 2x2x2, in rank digit order.
const FREE_SLOTS: [usize; 7] = [0, 1, 2, 3, 4, 5, 7];
const ORI_WEIGHT: u32 = 729;

/// Number of orientation coordinates; a rank is `perm * 729 + ori`.
pub(crate) const CUBE2_ORIENTATIONS: u32 = ORI_WEIGHT;
const FACTORIAL: [u32; 8] = [1, 1, 2, 6, 24, 120, 720, 5040];

impl PuzzleKind {
    /// Width of [`encode_into`](Self::encode_into)'s output.
    pub fn encoded_len(self) -> usize {
        match self {
            PuzzleKind::Cube2 => NUM_CORNERS * CORNER_BLOCK,
            PuzzleKind::Cube3 => NUM_CORNERS * CORNER_BLOCK + NUM_EDGES * EDGE_BLOCK,
        }
    }

    /// One-hot encoding: per slot, one block marking the (cubie, orientation)
    /// it holds. `out` must have length [`encoded_len`](Self::encoded_len) and
    /// is overwritten.
    pub fn encode_into(self, s: &PuzzleState, out: &mut [f32]) {
        assert_eq!(out.len(), self.encoded_len(), "encoding buffer width");
        out.fill(0.0);
        for i in 0..NUM_CORNERS {
            let hot = s.corner_perm[i] as usize * 3 + s.corner_ori[i] as usize;
            out[i * CORNER_BLOCK + hot] = 1.0;
        }
        if self == PuzzleKind::Cube3 {
            let base = NUM_CORNERS * CORNER_BLOCK;
            for i in 0..NUM_EDGES {
                let hot = s.edge_perm[i] as usize * 2 + s.edge_ori[i] as usize;
                out[base + i * EDGE_BLOCK + hot] = 1.0;
            }
        }
    }

    pub fn encode(self, s: &PuzzleState) -> Vec<f32> {
        let mut out = vec![0.0; self.encoded_len()];
        self.encode_into(s, &mut out);
        out
    }

    /// Encodes a batch into one row-major buffer.
    pub fn encode_batch(self, states: &[PuzzleState]) -> Vec<f32> {
        let width = self.encoded_len();
        let mut out = vec![0.0; states.len() * width];
        for (s, row) in states.iter().zip(out.chunks_exact_mut(width)) {
            self.encode_into(s, row);
        }
        out
    }

    /// Perfect rank of a pinned 2x2x2 state onto `0..CUBE2_STATES`.
    ///
    /// Mixed radix: Lehmer code of the seven free corners, times 3^6, plus the
    /// base-3 orientation digits of slots URF..DLF. The goal ranks 0.
    pub fn rank(self, s: &PuzzleState) -> Result<u32, PuzzleError> {
        if self != PuzzleKind::Cube2 {
            return Err(PuzzleError::Unsupported("rank", self));
        }
        if s.corner_perm[DBL] != DBL as u8 || s.corner_ori[DBL] != 0 {
            return Err(PuzzleError::InvalidState(self));
        }
        Ok(cube2_rank(s))
    }

    pub fn unrank(self, rank: u32) -> Result<PuzzleState, PuzzleError> {
        if self != PuzzleKind::Cube2 {
            return Err(PuzzleError::Unsupported("unrank", self));
        }
        if rank as usize >= CUBE2_STATES {
            return Err(PuzzleError::RankOutOfRange(rank as u64));
        }
        Ok(cube2_unrank(rank))
    }
}

#[inline]
fn free_index(cubie: u8) -> u8 {
    if cubie == 7 {
        6
    } else {
        cubie
    }
}

#[inline]
fn free_cubie(index: u8) -> u8 {
    if index == 6 {
        7
    } else {
        index
    }
}

/// Rank without validity checks; callers guarantee DBL is pinned.
#[inline]
pub(crate) fn cube2_rank(s: &PuzzleState) -> u32 {
    let mut perm = [0u8; 7];
    for (k, &slot) in FREE_SLOTS.iter().enumerate() {
        perm[k] = free_index(s.corner_perm[slot]);
    }
    let mut perm_rank = 0u32;
    for i in 0..7 {
        let smaller = perm[i + 1..].iter().filter(|&&x| x < perm[i]).count() as u32;
        perm_rank += smaller * FACTORIAL[6 - i];
    }
    let mut ori_rank = 0u32;
    for &o in &s.corner_ori[..6] {
        ori_rank = ori_rank * 3 + o as u32;
    }
    perm_rank * ORI_WEIGHT + ori_rank
}

pub(crate) fn cube2_unrank(rank: u32) -> PuzzleState {
    let mut perm_rank = rank / ORI_WEIGHT;
    let mut ori_rank = rank % ORI_WEIGHT;

    let mut available: Vec<u8> = (0..7).collect();
    let mut s = PuzzleState::GOAL;
    for (k, &slot) in FREE_SLOTS.iter().enumerate() {
        let f = FACTORIAL[6 - k];
        let digit = (perm_rank / f) as usize;
        perm_rank %= f;
        s.corner_perm[slot] = free_cubie(available.remove(digit));
    }

    let mut twist = 0u32;
    for slot in (0..6).rev() {
        let o = (ori_rank % 3) as u8;
        ori_rank /= 3;
        s.corner_ori[slot] = o;
        twist += o as u32;
    }
    s.corner_ori[7] = ((3 - twist % 3) % 3) as u8;
    s
}
