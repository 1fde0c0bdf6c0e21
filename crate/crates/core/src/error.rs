//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the SR code library.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid code or profile parameters.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A vector or partition had the wrong length.
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    /// A numeric argument was non-finite or out of its domain.
    #[error("invalid numeric argument: {0}")]
    InvalidArgument(String),

    /// Orthogonalization requires a strict variance contraction.
    #[error("degenerate orthogonalization: v_post {v_post} >= v_pri {v_pri}")]
    DegenerateOrthogonalization { v_post: f64, v_pri: f64 },

    /// A transfer curve has no contraction at the requested point.
    #[error("no contraction at v = {v}: mmse {mmse} >= v")]
    NoContraction { v: f64, mmse: f64 },

    /// A requested value lies outside a tabulated range.
    #[error("value {value} outside tabulated range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    /// The max-min program admits no distribution with a positive gap.
    #[error("optimization infeasible: {0}")]
    Infeasible(String),

    /// Malformed configuration file or CLI usage.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
