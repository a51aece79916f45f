use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{code}: {message}")]
    Precondition { code: &'static str, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Format(String),
    #[error("acceptance failure: {0}")]
    Acceptance(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> CliError {
        CliError::Io { path: path.display().to_string(), source }
    }

    pub fn precondition(message: impl Into<String>) -> CliError {
        CliError::Precondition { code: "precondition", message: message.into() }
    }

    /// 1 usage, 2 precondition or data error, 3 acceptance failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Precondition { .. } | CliError::Io { .. } | CliError::Format(_) => 2,
            CliError::Acceptance(_) => 3,
        }
    }
}

/// Stable reason code for each core error kind.
pub fn reason_code(e: &regg_core::Error) -> &'static str {
    use regg_core::Error::*;
    match e {
        Parity(_) => "parity",
        InvalidParameter(_) => "invalid-parameter",
        BudgetExceeded { .. } => "budget-exceeded",
        InvalidMove(_) => "invalid-move",
        InvalidSelection(_) => "invalid-selection",
        NumericalDegeneracy(_) => "numerical-degeneracy",
        DimensionMismatch { .. } => "dimension-mismatch",
        TooLarge(_) => "too-large",
        Constraint(_) => "constraint",
    }
}

impl From<regg_core::Error> for CliError {
    fn from(e: regg_core::Error) -> CliError {
        CliError::Precondition { code: reason_code(&e), message: e.to_string() }
    }
}
