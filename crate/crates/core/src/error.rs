use thiserror::Error;

/// Errors raised by the toolkit's pure operations and parsers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("line {line}{}: {message}", uid.as_ref().map(|u| format!(" (uid {u})")).unwrap_or_default())]
    Parse {
        line: usize,
        uid: Option<String>,
        message: String,
    },

    #[error("duplicate uid {0:?}")]
    DuplicateUid(String),

    #[error("length mismatch: {left} gold vs {right} predicted")]
    LengthMismatch { left: usize, right: usize },

    #[error("{0}")]
    Config(String),

    #[error("training diverged at epoch {epoch}: {message}")]
    Diverged { epoch: usize, message: String },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
