use thiserror::Error;

/// Errors produced while assembling operators, growth matrices, or trajectories.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is singular to working precision (zero pivot in column {column})")]
    Singular { column: usize },

    #[error("eigenvalue iteration did not converge after {iterations} iterations ({remaining} eigenvalues left)")]
    NoConvergence { iterations: usize, remaining: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
}

impl Error {
    /// True for failures of the numerical machinery rather than of the caller's input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. } | Error::NoConvergence { .. } | Error::NonFinite(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
