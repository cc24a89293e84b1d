//! Distance-table file format and on-disk cache.
//!
//! Little-endian layout:
//!
//! ```text
//! "AQDT"            4 bytes magic
//! version           u32 (currently 1)
//! puzzle            u8 (0 = cube2, 1 = cube3)
//! max_len           u32 meta-action length L
//! num_actions       u32
//! space_digest      32 bytes, SHA-256 of the action-space descriptor
//! state_count       u64
//! distances         state_count × u8, indexed by rank, 255 = unreached
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::DistanceTable;
use crate::error::{Error, Result};
use crate::puzzle::{ActionSpace, PuzzleKind};

pub const MAGIC: &[u8; 4] = b"AQDT";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 1 + 4 + 4 + 32 + 8;

/// Text that pins down an action space: puzzle, L, and the base-move order.
pub fn space_descriptor(space: &ActionSpace) -> String {
    let base: Vec<String> = space.base_moves().iter().map(|m| m.to_string()).collect();
    format!("{};L={};base={}", space.puzzle(), space.max_len(), base.join(","))
}

pub fn space_digest(space: &ActionSpace) -> [u8; 32] {
    Sha256::digest(space_descriptor(space).as_bytes()).into()
}

fn puzzle_id(kind: PuzzleKind) -> u8 {
    match kind {
        PuzzleKind::Cube2 => 0,
        PuzzleKind::Cube3 => 1,
    }
}

pub fn encode_table(table: &DistanceTable) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_LEN + table.dist.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.push(puzzle_id(table.puzzle));
    buf.extend_from_slice(&(table.max_len as u32).to_le_bytes());
    buf.extend_from_slice(&(table.num_actions as u32).to_le_bytes());
    buf.extend_from_slice(&table.digest);
    buf.extend_from_slice(&(table.dist.len() as u64).to_le_bytes());
    buf.extend_from_slice(&table.dist);
    buf
}

pub fn decode_table(bytes: &[u8]) -> Result<DistanceTable> {
    let bad = |what: &str| Error::Format(format!("distance table: {what}"));
    if bytes.len() < HEADER_LEN {
        return Err(bad("truncated header"));
    }
    if &bytes[..4] != MAGIC {
        return Err(bad("bad magic bytes"));
    }
    let u32_at = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let puzzle = match bytes[8] {
        0 => PuzzleKind::Cube2,
        1 => PuzzleKind::Cube3,
        _ => return Err(bad("unknown puzzle id")),
    };
    let max_len = u32_at(9) as usize;
    let num_actions = u32_at(13) as usize;
    let digest: [u8; 32] = bytes[17..49].try_into().unwrap();
    let count = u64::from_le_bytes(bytes[49..57].try_into().unwrap());
    let dist = &bytes[HEADER_LEN..];
    if dist.len() as u64 != count {
        return Err(bad("state count does not match payload"));
    }
    Ok(DistanceTable {
        puzzle,
        max_len,
        num_actions,
        digest,
        dist: dist.to_vec(),
    })
}

pub fn save_table(table: &DistanceTable, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&encode_table(table))?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_table(path: &Path) -> Result<DistanceTable> {
    decode_table(&fs::read(path)?)
}

/// Cache file name for an action space: `<puzzle>-L<L>-<digest prefix>.aqdt`.
pub fn cache_path(dir: &Path, space: &ActionSpace) -> PathBuf {
    let digest = hex::encode(space_digest(space));
    dir.join(format!("{}-L{}-{}.aqdt", space.puzzle(), space.max_len(), &digest[..16]))
}

/// Loads the cached table for `space` from `dir`, building and caching it
/// when missing or stale.
pub fn load_or_build(space: &ActionSpace, dir: &Path) -> Result<DistanceTable> {
    let path = cache_path(dir, space);
    if let Ok(table) = load_table(&path) {
        if table.matches(space) {
            return Ok(table);
        }
    }
    let table = super::bfs_distances(space)?;
    save_table(&table, &path)?;
    Ok(table)
}
