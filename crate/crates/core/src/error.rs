//! Crate-wide error type.

/// Errors produced by ingestion, fitting and sampling.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed input data, reported with the 1-based data row number.
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    /// Input violates a documented contract (unknown labels, duplicate ids,
    /// unmapped regions, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// Invalid argument to a sampling or analysis routine.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Fewer than two lists survived list-inclusion filtering; the stratum
    /// cannot be modeled and must fall back to its observed count.
    #[error("stratum unmodelable: {0}")]
    Unmodelable(String),

    /// A log-linear interaction term has a zero margin and cannot be fitted.
    #[error("term unidentifiable: {0}")]
    Unidentifiable(String),

    /// Iterative proportional fitting failed to reach the margin tolerance.
    #[error("IPF did not converge after {sweeps} sweeps (last delta {delta:e})")]
    Convergence { sweeps: u32, delta: f64 },

    /// The unobserved-cell mass approached one: the population draw would be
    /// unbounded. Chains abort with diagnostics instead of looping.
    #[error("unbounded population draw: residual mass {residual:e} below divergence threshold")]
    Divergence { residual: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Invariant violation; indicates a bug, not bad input.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
