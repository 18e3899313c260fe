use alloc::string::String;

/// Failure modes shared by every algorithm in this crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("FDA was selected but the target pool is empty")]
    MissingTargets,
    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),
    #[error("alignment error: {0}")]
    Alignment(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidInput(alloc::format!($($arg)*))
    };
}
pub(crate) use invalid;
