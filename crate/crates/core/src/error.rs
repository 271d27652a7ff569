//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by generation, geometry, solver and harness routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Vector or matrix dimensions do not match.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A numeric argument was outside the function's domain (NaN/inf input).
    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    /// A computation overflowed the representable float range.
    #[error("numeric overflow at coordinate {coordinate}: {detail}")]
    NumericOverflow { coordinate: usize, detail: String },

    /// The data cannot support the requested operation (e.g. mean(Y) <= 0).
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// A mirror descent iterate left the representable range.
    #[error("solver diverged at iteration {iteration}, coordinate {coordinate}")]
    Diverged { iteration: usize, coordinate: usize },

    /// Every trial failed at some point of a parameter sweep.
    #[error("sweep failed: all {trials} trials failed at axis value {axis_value}")]
    SweepFailure { axis_value: f64, trials: usize },

    /// Required trajectory fields are missing for a stopping rule.
    #[error("missing trajectory data: {0}")]
    MissingData(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A serialized dataset or summary could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
