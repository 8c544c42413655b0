//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by sampling, estimation, and bound evaluation.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter violates a precondition.
    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter {
        /// Name of the offending parameter.
        name: &'static str,
        /// Human-readable description of the violation.
        message: String,
    },

    /// A vector or matrix argument has the wrong dimension.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch {
        /// Expected dimension.
        expected: usize,
        /// Dimension actually supplied.
        actual: usize,
    },

    /// The Gram matrix of the Gaussian draw stayed numerically singular
    /// through every resampling attempt.
    #[error(
        "Gram matrix numerically singular after {attempts} attempts \
         (min/max eigenvalue ratio {ratio:.3e})"
    )]
    SingularGram {
        /// Number of sampling attempts made.
        attempts: u32,
        /// Eigenvalue ratio observed on the final attempt.
        ratio: f64,
    },

    /// The objective returned a non-finite value; the estimate is aborted
    /// rather than propagating NaN/inf.
    #[error("objective returned non-finite value {value} at {point}")]
    NonFiniteEvaluation {
        /// The offending value (NaN, +inf, or -inf).
        value: f64,
        /// Symbolic description of the evaluation point.
        point: String,
    },

    /// A matrix that must be symmetric is not, beyond tolerance.
    #[error("matrix not symmetric: max |M - M^T| = {defect:.3e} exceeds {tolerance:.1e}")]
    NotSymmetric {
        /// Largest absolute asymmetry entry.
        defect: f64,
        /// Tolerance that was applied.
        tolerance: f64,
    },

    /// A required optional input (e.g. a smoothness constant) was absent.
    #[error("missing input: {0}")]
    MissingInput(&'static str),

    /// An estimator failed inside a Monte Carlo run; wraps the underlying
    /// error with the index of the failing trial.
    #[error("trial {trial}: {source}")]
    TrialFailed {
        /// Zero-based index of the trial that failed.
        trial: u64,
        /// The estimator error that caused the failure.
        #[source]
        source: Box<Error>,
    },
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Shorthand constructor for [`Error::InvalidParameter`].
pub(crate) fn invalid(name: &'static str, message: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        message: message.into(),
    }
}
