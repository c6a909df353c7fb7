//! Error type shared by all solver modules.

/// Errors produced by law construction, solvers and comparisons.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A parameter is outside its admissible domain (scales, weights, slopes).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An evaluation argument is outside the function's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A coefficient index is out of range for its transfer formula.
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    /// The discrete resolvent system could not be factorized.
    #[error("resolvent solve failed (operator norm estimate {norm_estimate})")]
    SingularSystem { norm_estimate: f64 },

    /// Fixed-point iteration residuals grew for several consecutive steps.
    #[error("iteration diverging after {iterations} steps (residual {residual:e})")]
    NonContractive { iterations: usize, residual: f64 },

    /// A tolerance target was not reached within the term budget.
    #[error("tolerance {tolerance} not reached within {max_terms} terms (best distance {best})")]
    NoConvergence {
        tolerance: f64,
        max_terms: usize,
        best: f64,
    },

    /// Two laws cannot be compared on the requested evaluation grid.
    #[error("evaluation grid mismatch: {0}")]
    GridMismatch(String),

    /// An operation needs at least one sample.
    #[error("empty series")]
    EmptySeries,
}

pub type Result<T> = std::result::Result<T, Error>;
