//! Cubie-level move tables.
//!
//! Corners are numbered `URF UFL ULB UBR DFR DLF DBL DRB` and edges
//! `UR UF UL UB DR DF DL DB FR FL BL BR`. A move is stored in "replaced-by"
//! form: after the move, slot `i` holds the cubie that was in slot `perm[i]`,
//! twisted by `ori[i]`.

use std::fmt;
use std::sync::LazyLock;

use super::PuzzleState;

pub const NUM_CORNERS: usize = 8;
pub const NUM_EDGES: usize = 12;

/// Corner slot held fixed on the 2x2x2 so whole-cube rotations are quotiented out.
pub const DBL: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Face {
    U,
    D,
    R,
    L,
    F,
    B,
}

impl Face {
    pub const ALL: [Face; 6] = [Face::U, Face::D, Face::R, Face::L, Face::F, Face::B];

    pub fn letter(self) -> char {
        match self {
            Face::U => 'U',
            Face::D => 'D',
            Face::R => 'R',
            Face::L => 'L',
            Face::F => 'F',
            Face::B => 'B',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Turn {
    Clockwise,
    CounterClockwise,
}

/// A quarter turn of one face.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BaseMove {
    pub face: Face,
    pub turn: Turn,
}

impl BaseMove {
    pub const fn new(face: Face, turn: Turn) -> Self {
        Self { face, turn }
    }

    pub fn inverse(self) -> Self {
        let turn = match self.turn {
            Turn::Clockwise => Turn::CounterClockwise,
            Turn::CounterClockwise => Turn::Clockwise,
        };
        Self { face: self.face, turn }
    }

    /// The permutation/orientation effect of this move as a state.
    pub fn table(self) -> &'static PuzzleState {
        let idx = self.face as usize * 2 + self.turn as usize;
        &MOVE_TABLES[idx]
    }
}

impl fmt::Display for BaseMove {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.turn {
            Turn::Clockwise => write!(f, "{}", self.face.letter()),
            Turn::CounterClockwise => write!(f, "{}'", self.face.letter()),
        }
    }
}

struct RawMove {
    cp: [u8; NUM_CORNERS],
    co: [u8; NUM_CORNERS],
    ep: [u8; NUM_EDGES],
    eo: [u8; NUM_EDGES],
}

#[rustfmt::skip]
const RAW_CLOCKWISE: [RawMove; 6] = [
    // U
    RawMove {
        cp: [3, 0, 1, 2, 4, 5, 6, 7],
        co: [0, 0, 0, 0, 0, 0, 0, 0],
        ep: [3, 0, 1, 2, 4, 5, 6, 7, 8, 9, 10, 11],
        eo: [0; 12],
    },
    // D
    RawMove {
        cp: [0, 1, 2, 3, 5, 6, 7, 4],
        co: [0, 0, 0, 0, 0, 0, 0, 0],
        ep: [0, 1, 2, 3, 5, 6, 7, 4, 8, 9, 10, 11],
        eo: [0; 12],
    },
    // R
    RawMove {
        cp: [4, 1, 2, 0, 7, 5, 6, 3],
        co: [2, 0, 0, 1, 1, 0, 0, 2],
        ep: [8, 1, 2, 3, 11, 5, 6, 7, 4, 9, 10, 0],
        eo: [0; 12],
    },
    // L
    RawMove {
        cp: [0, 2, 6, 3, 4, 1, 5, 7],
        co: [0, 1, 2, 0, 0, 2, 1, 0],
        ep: [0, 1, 10, 3, 4, 5, 9, 7, 8, 2, 6, 11],
        eo: [0; 12],
    },
    // F
    RawMove {
        cp: [1, 5, 2, 3, 0, 4, 6, 7],
        co: [1, 2, 0, 0, 2, 1, 0, 0],
        ep: [0, 9, 2, 3, 4, 8, 6, 7, 1, 5, 10, 11],
        eo: [0, 1, 0, 0, 0, 1, 0, 0, 1, 1, 0, 0],
    },
    // B
    RawMove {
        cp: [0, 1, 3, 7, 4, 5, 2, 6],
        co: [0, 0, 1, 2, 0, 0, 2, 1],
        ep: [0, 1, 2, 11, 4, 5, 6, 10, 8, 9, 3, 7],
        eo: [0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 1, 1],
    },
];

// Indexed by `face * 2 + turn`.
static MOVE_TABLES: LazyLock<[PuzzleState; 12]> = LazyLock::new(|| {
    let mut out = [PuzzleState::GOAL; 12];
    for (face, raw) in RAW_CLOCKWISE.iter().enumerate() {
        let cw = PuzzleState {
            corner_perm: raw.cp,
            corner_ori: raw.co,
            edge_perm: raw.ep,
            edge_ori: raw.eo,
        };
        let ccw = cw.compose(&cw).compose(&cw);
        out[face * 2] = cw;
        out[face * 2 + 1] = ccw;
    }
    out
});

/// Canonical 3x3x3 base-move order: `U U' D D' R R' L L' F F' B B'`.
pub fn cube3_moves() -> Vec<BaseMove> {
    Face::ALL
        .iter()
        .flat_map(|&face| {
            [
                BaseMove::new(face, Turn::Clockwise),
                BaseMove::new(face, Turn::CounterClockwise),
            ]
        })
        .collect()
}

/// Canonical 2x2x2 base-move order: `U U' R R' F F'` (none of them touch DBL).
pub fn cube2_moves() -> Vec<BaseMove> {
    [Face::U, Face::R, Face::F]
        .iter()
        .flat_map(|&face| {
            [
                BaseMove::new(face, Turn::Clockwise),
                BaseMove::new(face, Turn::CounterClockwise),
            ]
        })
        .collect()
}
