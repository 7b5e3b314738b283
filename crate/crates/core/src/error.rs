//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by builders, engines, protocols, and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A requested filter/pulse configuration has no solution.
    #[error("infeasible sequence: {0}")]
    InfeasibleSequence(String),

    /// A problem size exceeds a hard capacity limit (dense dimension,
    /// string count, …).
    #[error("capacity exceeded: {0}")]
    CapacityExceeded(String),

    /// An integrator step would violate its stability bound; the caller
    /// must subdivide.
    #[error("step size too large: {0}")]
    StepSize(String),

    /// An iterative numerical routine failed to converge.
    #[error("convergence failure: {0}")]
    ConvergenceFailure(String),

    /// A fit could not be performed or did not reach an acceptable result.
    #[error("fit failure: {0}")]
    FitFailure(String),

    /// A cached artifact exists but does not match the requested
    /// configuration (hash mismatch, version skew).
    #[error("cache mismatch: {0}")]
    CacheMismatch(String),

    /// Malformed persisted data (trace files, cached tables).
    #[error("format error: {0}")]
    Format(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Shorthand constructor for [`Error::InvalidParameter`].
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
