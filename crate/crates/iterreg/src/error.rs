//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// Linear predictor too large for a Poisson cumulant evaluation.
    #[error("exp saturation at sample {index}: linear predictor {value} exceeds 700")]
    Saturation { index: usize, value: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// An iterate or evaluation point left the geometry's valid domain.
    #[error("domain violation in {context}{}", iteration.map(|t| format!(" at iteration {t}")).unwrap_or_default())]
    DomainViolation {
        context: &'static str,
        iteration: Option<usize>,
    },

    #[error("power iteration did not converge within {iterations} iterations")]
    PowerIterationDiverged { iterations: usize },

    #[error("operation requires mean_truth, which is absent")]
    MissingMeanTruth,

    #[error("smoothness constant for the Poisson/euclidean case requires a radius")]
    MissingRadius,

    #[error("solver did not converge: {context} (residual {residual:.3e} after {iterations} iterations)")]
    SolverDidNotConverge {
        context: &'static str,
        residual: f64,
        iterations: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
