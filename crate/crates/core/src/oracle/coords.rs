//! Move tables on the 2x2x2 rank coordinates.
//!
//! A rank is `perm * 729 + ori`, and with DBL pinned a base move acts on the
//! two coordinates independently, so two small tables replace full state
//! arithmetic inside the BFS.

use std::sync::LazyLock;

use crate::puzzle::{cube2_rank, cube2_unrank, PuzzleKind, CUBE2_ORIENTATIONS, CUBE2_STATES};

pub(crate) const PERMS: usize = CUBE2_STATES / CUBE2_ORIENTATIONS as usize;
const ORIS: usize = CUBE2_ORIENTATIONS as usize;
const MOVES: usize = 6;

pub(crate) struct Cube2Coords {
    perm: Vec<[u16; MOVES]>,
    ori: Vec<[u16; MOVES]>,
}

pub(crate) static CUBE2_COORDS: LazyLock<Cube2Coords> = LazyLock::new(Cube2Coords::build);

impl Cube2Coords {
    fn build() -> Self {
        let kind = PuzzleKind::Cube2;
        let moves = kind.base_moves();
        let w = CUBE2_ORIENTATIONS;
        let perm = (0..PERMS as u32)
            .map(|p| {
                let s = cube2_unrank(p * w);
                std::array::from_fn(|m| (cube2_rank(&kind.apply_base(&s, moves[m])) / w) as u16)
            })
            .collect();
        let ori = (0..ORIS as u32)
            .map(|o| {
                let s = cube2_unrank(o);
                std::array::from_fn(|m| (cube2_rank(&kind.apply_base(&s, moves[m])) % w) as u16)
            })
            .collect();
        Self { perm, ori }
    }

    /// Rank after applying base moves `seq` (cube2 base-move indices) in order.
    #[inline]
    pub(crate) fn apply(&self, rank: u32, seq: &[u8]) -> u32 {
        let w = CUBE2_ORIENTATIONS;
        let (mut p, mut o) = ((rank / w) as usize, (rank % w) as usize);
        for &m in seq {
            p = self.perm[p][m as usize] as usize;
            o = self.ori[o][m as usize] as usize;
        }
        p as u32 * w + o as u32
    }

    #[inline]
    pub(crate) fn apply_perm(&self, perm: u32, seq: &[u8]) -> u32 {
        let mut p = perm as usize;
        for &m in seq {
            p = self.perm[p][m as usize] as usize;
        }
        p as u32
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::puzzle::ActionSpace;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn coordinate_moves_agree_with_state_moves() {
        let space = ActionSpace::new(PuzzleKind::Cube2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let s = PuzzleKind::Cube2.scramble(20, &mut rng);
            let r = cube2_rank(&s);
            for a in 0..space.len() {
                assert_eq!(
                    CUBE2_COORDS.apply(r, space.sequence(a)),
                    cube2_rank(&space.step(&s, a))
                );
            }
        }
    }
}
