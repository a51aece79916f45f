use alloc::string::String;

/// Errors reported by every fallible operation in the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("parity violation: {0}")]
    Parity(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("rejection budget of {tries} attempts exceeded")]
    BudgetExceeded { tries: u64 },
    #[error("invalid move: {0}")]
    InvalidMove(String),
    #[error("invalid selection: {0}")]
    InvalidSelection(String),
    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error("constraint violated: {0}")]
    Constraint(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$kind(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;
