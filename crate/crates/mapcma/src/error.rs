use thiserror::Error;

/// Errors surfaced by the numeric core (matrix kernels, update rules,
/// strategy-parameter construction).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A Cholesky pivot was non-positive: the matrix is not positive definite.
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    /// A vector or matrix had the wrong length for the operation.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A covariance update produced a matrix that is no longer positive
    /// definite. The caller decides whether to abort the run.
    #[error("covariance matrix lost positive definiteness")]
    CovarianceCollapse,

    /// The requested normal-inverse-Wishart prior parameters are inconsistent
    /// (e.g. the scale matrix coefficient is non-positive).
    #[error("invalid normal-inverse-Wishart prior: {0}")]
    InvalidPrior(String),

    /// Invalid strategy or trial configuration.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
