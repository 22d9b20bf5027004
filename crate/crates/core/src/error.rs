use std::io;

use thiserror::Error;

/// Errors raised by tensor, measurement and solver operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mode {mode} out of range for an order-{order} tensor")]
    ModeOutOfRange { mode: usize, order: usize },
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch { expected: Vec<usize>, got: Vec<usize> },
    #[error("invalid tensor shape: {0}")]
    InvalidShape(String),
    #[error("rank {rank} exceeds dimension {dim} in mode {mode}")]
    RankExceedsDimension { mode: usize, rank: usize, dim: usize },
    #[error("invalid mode order {0:?}")]
    InvalidPermutation(Vec<usize>),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate step size: projected gradient vanishes under the measurement operator")]
    DegenerateStep,
    #[error("malformed tensor file: {0}")]
    Format(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn shape_mismatch(expected: &[usize], got: &[usize]) -> Error {
    Error::ShapeMismatch {
        expected: expected.to_vec(),
        got: got.to_vec(),
    }
}
