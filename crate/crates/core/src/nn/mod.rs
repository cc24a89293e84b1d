//! Dense residual networks with hand-written backpropagation and Adam.
//!
//! A network maps row-major batches of encoded states to `output_dim`
//! columns: one column for a cost-to-go network, one per action for a
//! Q-network.

mod adam;
mod checkpoint;
mod matrix;
mod network;

use thiserror::Error;

pub use adam::{AdamConfig, OptState};
pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, file_digest, load_checkpoint, save_checkpoint, Checkpoint,
};
pub use matrix::{Matrix, Scalar};
pub use network::{BatchStats, Gradients, LossGrad, NetArchitecture, NetworkParams, Target};

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch in {what}: expected {expected}, got {got}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),
    #[error("checkpoint format error: {0}")]
    Format(String),
    #[error("checkpoint version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("checkpoint is truncated")]
    Truncated,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
