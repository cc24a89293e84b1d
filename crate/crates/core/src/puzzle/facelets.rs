//! Sticker view of a cubie state, for debugging output.
//!
//! Facelets are numbered face by face in the order `U R F D L B`, nine per
//! face, row-major as seen when looking straight at the face (U with B at the
//! top, D with F at the top).

use super::moves::{NUM_CORNERS, NUM_EDGES};
use super::{PuzzleKind, PuzzleState};

const FACE_LETTERS: [char; 6] = ['U', 'R', 'F', 'D', 'L', 'B'];

#[rustfmt::skip]
const CORNER_FACELETS: [[usize; 3]; NUM_CORNERS] = [
    [8, 9, 20], [6, 18, 38], [0, 36, 47], [2, 45, 11],
    [29, 26, 15], [27, 44, 24], [33, 53, 42], [35, 17, 51],
];

#[rustfmt::skip]
const EDGE_FACELETS: [[usize; 2]; NUM_EDGES] = [
    [5, 10], [7, 19], [3, 37], [1, 46], [32, 16], [28, 25],
    [30, 43], [34, 52], [23, 12], [21, 41], [50, 39], [48, 14],
];

impl PuzzleState {
    /// 54 facelet colours, each the letter of the face whose centre it matches.
    pub fn facelets(&self) -> [char; 54] {
        let mut out = ['?'; 54];
        for (face, chunk) in out.chunks_mut(9).enumerate() {
            chunk[4] = FACE_LETTERS[face];
        }
        for i in 0..NUM_CORNERS {
            let cubie = self.corner_perm[i] as usize;
            let ori = self.corner_ori[i] as usize;
            for n in 0..3 {
                out[CORNER_FACELETS[i][(n + ori) % 3]] =
                    FACE_LETTERS[CORNER_FACELETS[cubie][n] / 9];
            }
        }
        for i in 0..NUM_EDGES {
            let cubie = self.edge_perm[i] as usize;
            let ori = self.edge_ori[i] as usize;
            for n in 0..2 {
                out[EDGE_FACELETS[i][(n + ori) % 2]] = FACE_LETTERS[EDGE_FACELETS[cubie][n] / 9];
            }
        }
        out
    }

    /// Unfolded net:
    ///
    /// ```text
    ///       U
    ///     L F R B
    ///       D
    /// ```
    ///
    /// `cube2` shows only the four corner stickers of each face.
    pub fn sticker_grid(&self, kind: PuzzleKind) -> String {
        let f = self.facelets();
        let (cells, n): (&[usize], usize) = match kind {
            PuzzleKind::Cube2 => (&[0, 2, 6, 8], 2),
            PuzzleKind::Cube3 => (&[0, 1, 2, 3, 4, 5, 6, 7, 8], 3),
        };
        let row = |face: usize, r: usize| -> String {
            cells[r * n..(r + 1) * n]
                .iter()
                .map(|&c| f[face * 9 + c].to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        let pad = " ".repeat(2 * n);
        let mut out = String::new();
        for r in 0..n {
            out.push_str(&format!("{pad}{}\n", row(0, r)));
        }
        for r in 0..n {
            // L F R B
            let line = [4, 2, 1, 5]
                .iter()
                .map(|&face| row(face, r))
                .collect::<Vec<_>>()
                .join(" ");
            out.push_str(&line);
            out.push('\n');
        }
        for r in 0..n {
            out.push_str(&format!("{pad}{}\n", row(3, r)));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::puzzle::{BaseMove, Face, Turn};

    fn face(f: &[char; 54], idx: usize) -> &[char] {
        &f[idx * 9..idx * 9 + 9]
    }

    #[test]
    fn goal_faces_are_uniform() {
        let f = PuzzleState::GOAL.facelets();
        for (i, &c) in FACE_LETTERS.iter().enumerate() {
            assert!(face(&f, i).iter().all(|&x| x == c));
        }
    }

    #[test]
    fn r_turn_lifts_front_column_onto_up() {
        let r = BaseMove::new(Face::R, Turn::Clockwise);
        let s = PuzzleKind::Cube3.apply_base(&PuzzleState::GOAL, r);
        let f = s.facelets();
        // U3, U6, U9 show the front colour; F3, F6, F9 show down.
        assert_eq!([f[2], f[5], f[8]], ['F', 'F', 'F']);
        assert_eq!([f[20], f[23], f[26]], ['D', 'D', 'D']);
        assert!(face(&f, 1).iter().all(|&x| x == 'R'));
        assert!(face(&f, 4).iter().all(|&x| x == 'L'));
    }

    #[test]
    fn u_turn_moves_right_row_onto_front() {
        let u = BaseMove::new(Face::U, Turn::Clockwise);
        let s = PuzzleKind::Cube3.apply_base(&PuzzleState::GOAL, u);
        let f = s.facelets();
        // Clockwise U brings the R face's top row to F.
        assert_eq!([f[18], f[19], f[20]], ['R', 'R', 'R']);
        assert_eq!([f[9], f[10], f[11]], ['B', 'B', 'B']);
        assert!(face(&f, 0).iter().all(|&x| x == 'U'));
    }

    #[test]
    fn f_turn_moves_up_row_onto_right() {
        let fm = BaseMove::new(Face::F, Turn::Clockwise);
        let s = PuzzleKind::Cube3.apply_base(&PuzzleState::GOAL, fm);
        let f = s.facelets();
        // R1, R4, R7 take the U colour.
        assert_eq!([f[9], f[12], f[15]], ['U', 'U', 'U']);
        assert_eq!([f[6], f[7], f[8]], ['L', 'L', 'L']);
    }

    #[test]
    fn every_colour_appears_nine_times() {
        let mut s = PuzzleState::GOAL;
        for m in PuzzleKind::Cube3.base_moves().into_iter().cycle().take(37) {
            s = PuzzleKind::Cube3.apply_base(&s, m);
        }
        let f = s.facelets();
        for c in FACE_LETTERS {
            assert_eq!(f.iter().filter(|&&x| x == c).count(), 9);
        }
    }

    #[test]
    fn grid_layout() {
        let g = PuzzleState::GOAL.sticker_grid(PuzzleKind::Cube2);
        assert_eq!(g, "    U U\n    U U\nL L F F R R B B\nL L F F R R B B\n    D D\n    D D\n");
        let g3 = PuzzleState::GOAL.sticker_grid(PuzzleKind::Cube3);
        assert_eq!(g3.lines().count(), 9);
    }
}
