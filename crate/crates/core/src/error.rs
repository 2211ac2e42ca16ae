use thiserror::Error;

/// Crate-wide error type. `InvalidInput` maps to CLI exit code 2,
/// the numerical failures map to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("tolerance not reached: {0}")]
    Tolerance(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
