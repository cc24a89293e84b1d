use thiserror::Error;

use crate::nn::NnError;
use crate::puzzle::PuzzleError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Puzzle(#[from] PuzzleError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Format(String),
    #[error("state is not covered by the distance table")]
    Uncovered,
    #[error("model output width {got} does not match the expected {expected}")]
    Width { expected: usize, got: usize },
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("no convergence within {0} sweeps")]
    NoConvergence(usize),
    #[error("graph is not total: state {state} has no successor for action {action}")]
    MissingEdge { state: usize, action: usize },
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
