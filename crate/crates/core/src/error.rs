//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The point coincides with the axis (or its antipode), so the tangent
    /// direction `y` is undefined. Density code handles this measure-zero
    /// set separately via the 0/0 = 0 convention.
    #[error("pole degeneracy: point coincides with the axis, y undefined")]
    PoleDegeneracy,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported model: {0}")]
    Unsupported(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("root bracketing failed: {0}")]
    BracketFailure(String),

    #[error("optimizer did not converge: {0}")]
    NonConvergence(String),

    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
