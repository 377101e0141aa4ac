use thiserror::Error;

/// Errors raised by every fallible operation in the crate.
///
/// The variant determines the machine-readable code reported by the CLI.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LllError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("cap exceeded: {0}")]
    CapExceeded(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl LllError {
    pub fn code(&self) -> &'static str {
        match self {
            LllError::Invalid(_) => "invalid_input",
            LllError::Parse(_) => "parse_error",
            LllError::CapExceeded(_) => "cap_exceeded",
            LllError::Domain(_) => "domain_error",
            LllError::Verification(_) => "verification_failed",
        }
    }

    /// Usage-type errors map to exit code 2 in the CLI, the rest to 1.
    pub fn is_usage(&self) -> bool {
        matches!(self, LllError::Invalid(_) | LllError::Parse(_))
    }
}

pub type Result<T> = std::result::Result<T, LllError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(LllError::Invalid(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(LllError::Domain(msg.into()))
}
