use thiserror::Error;

/// Errors raised by the escalation library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} doses vs {right} doses")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid tally: {0}")]
    InvalidTally(String),

    #[error("cannot parse tally: {0}")]
    Parse(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no valid join of fiber {fiber}: componentwise bound is not a tally")]
    NoValidJoin { fiber: u32 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dims(left: usize, right: usize) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { left, right })
    }
}
