//! Crate-wide error type for construction, parsing and validation failures.
//!
//! Solver runs themselves never return `Err`: algorithmic events (breakdown,
//! stagnation, invalid requests) are reported through
//! [`SolverStatus`](crate::control::SolverStatus) so that a partial result and
//! its residual history stay available to the caller. This enum covers
//! everything that happens *before* an iteration loop can start: building
//! matrices and preconditioners, reading files, checking dimensions.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Vector or matrix dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A structurally invalid sparse matrix (bad offsets, out-of-range or
    /// unsorted column indices, ...).
    #[error("malformed matrix: {0}")]
    MalformedMatrix(String),

    /// The operation needs a capability the operator does not advertise.
    #[error("operator does not support {0}")]
    Unsupported(&'static str),

    /// A diagonal entry is missing or too small to divide by.
    #[error("unusable diagonal at row {row}: |a_ii| = {magnitude:e}")]
    ZeroDiagonal { row: usize, magnitude: f64 },

    /// The matrix failed a complex-symmetry check that the caller requested.
    #[error("matrix is not complex-symmetric: {0}")]
    NotSymmetric(String),

    /// Dense factorization hit a zero pivot column; the matrix is singular
    /// to working precision.
    #[error("singular matrix: {0}")]
    Singular(String),

    /// Text input could not be parsed; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// An argument value is out of its documented range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
