use std::path::PathBuf;

use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A scenario or CLI configuration is invalid.
    #[error("configuration error: {0}")]
    Config(String),
    /// A basis or design matrix does not have full row rank.
    #[error("rank deficient: {0}")]
    Rank(String),
    /// A Gram matrix is too ill-conditioned to invert reliably.
    #[error("ill-conditioned Gram matrix (condition number {0:.3e})")]
    IllConditioned(f64),
    /// A covariance matrix failed the Cholesky factorization.
    #[error("covariance is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),
    /// Operand dimensions disagree.
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn shape(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
