//! Binary checkpoint format.
//!
//! All integers and floats are little-endian:
//!
//! ```text
//! "AQNN"                 4 bytes magic
//! version                u32 (currently 1)
//! descriptor_len         u32
//! descriptor             descriptor_len × u32
//!                        (input_dim, n_hidden, hidden…, res_blocks, output_dim, batch_norm)
//! value_count            u64
//! values                 value_count × f32   trainable parameters in layer order
//! buffer_count           u64
//! buffers                buffer_count × f32  normalization running stats
//! has_opt                u8 (0 or 1)
//! [step                  u64
//!  lr beta1 beta2 eps    4 × f64
//!  m                     value_count × f32
//!  v                     value_count × f32]
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::adam::{AdamConfig, OptState};
use super::network::{NetArchitecture, NetworkParams};
use super::NnError;

pub const MAGIC: &[u8; 4] = b"AQNN";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub params: NetworkParams<f32>,
    pub opt: Option<OptState<f32>>,
}

pub fn encode_checkpoint(params: &NetworkParams<f32>, opt: Option<&OptState<f32>>) -> Vec<u8> {
    let mut buf = Vec::with_capacity(32 + 12 * params.values.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    let desc = params.arch().descriptor();
    buf.extend_from_slice(&(desc.len() as u32).to_le_bytes());
    for d in desc {
        buf.extend_from_slice(&d.to_le_bytes());
    }
    put_f32s(&mut buf, &params.values);
    put_f32s(&mut buf, &params.buffers);
    match opt {
        None => buf.push(0),
        Some(opt) => {
            buf.push(1);
            buf.extend_from_slice(&opt.step.to_le_bytes());
            for x in [opt.config.lr, opt.config.beta1, opt.config.beta2, opt.config.eps] {
                buf.extend_from_slice(&x.to_le_bytes());
            }
            for x in opt.m.iter().chain(&opt.v) {
                buf.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    buf
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint, NnError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(NnError::Format("bad magic bytes".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(NnError::Version {
            found: version,
            expected: VERSION,
        });
    }
    let desc_len = r.u32()? as usize;
    if desc_len > 1 << 16 {
        return Err(NnError::Format("architecture descriptor too long".into()));
    }
    let desc = (0..desc_len).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
    let arch = NetArchitecture::from_descriptor(&desc)?;

    let values = r.f32s()?;
    let buffers = r.f32s()?;
    let n_values = values.len();
    let params = NetworkParams::from_parts(arch, values, buffers)?;

    let opt = match r.take(1)?[0] {
        0 => None,
        1 => {
            let step = r.u64()?;
            let mut cfg = [0.0f64; 4];
            for c in &mut cfg {
                *c = f64::from_le_bytes(r.take(8)?.try_into().unwrap());
            }
            let m = r.f32_array(n_values)?;
            let v = r.f32_array(n_values)?;
            Some(OptState {
                config: AdamConfig {
                    lr: cfg[0],
                    beta1: cfg[1],
                    beta2: cfg[2],
                    eps: cfg[3],
                },
                step,
                m,
                v,
            })
        }
        _ => return Err(NnError::Format("bad optimizer flag".into())),
    };
    if r.pos != bytes.len() {
        return Err(NnError::Format("trailing bytes after checkpoint".into()));
    }
    Ok(Checkpoint { params, opt })
}

/// Writes the checkpoint atomically (temp file, then rename).
pub fn save_checkpoint(
    path: &Path,
    params: &NetworkParams<f32>,
    opt: Option<&OptState<f32>>,
) -> Result<(), NnError> {
    let bytes = encode_checkpoint(params, opt);
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, NnError> {
    decode_checkpoint(&fs::read(path)?)
}

/// Hex SHA-256 of a file's bytes, for attributing results to checkpoints.
pub fn file_digest(path: &Path) -> Result<String, NnError> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

fn put_f32s(buf: &mut Vec<u8>, xs: &[f32]) {
    buf.extend_from_slice(&(xs.len() as u64).to_le_bytes());
    for x in xs {
        buf.extend_from_slice(&x.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NnError> {
        let end = self.pos.checked_add(n).ok_or(NnError::Truncated)?;
        let out = self.bytes.get(self.pos..end).ok_or(NnError::Truncated)?;
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, NnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, NnError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32s(&mut self) -> Result<Vec<f32>, NnError> {
        let n = self.u64()?;
        let n = usize::try_from(n).map_err(|_| NnError::Truncated)?;
        self.f32_array(n)
    }

    fn f32_array(&mut self, n: usize) -> Result<Vec<f32>, NnError> {
        let raw = self.take(n.checked_mul(4).ok_or(NnError::Truncated)?)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}
