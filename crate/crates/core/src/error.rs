use thiserror::Error;

/// Errors raised by the percolation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("site count overflows the supported range: {0}")]
    Overflow(String),

    #[error("configuration shape does not match the structure")]
    ShapeMismatch,

    #[error("site {0:?} lies outside the region")]
    OutOfRegion(Vec<usize>),

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("bound is below its validity range: {0}")]
    BelowValidity(String),

    #[error("quadrature did not converge: {0}")]
    NoConvergence(String),

    #[error("no root in bracket: {0}")]
    NoRoot(String),

    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
