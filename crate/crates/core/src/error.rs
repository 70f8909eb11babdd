use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DvqeError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("capacity exceeded: {what} (limit {limit}, requested {requested})")]
    Capacity {
        what: &'static str,
        limit: usize,
        requested: usize,
    },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl DvqeError {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        DvqeError::Argument(msg.into())
    }

    pub(crate) fn dim(expected: usize, got: usize) -> Self {
        DvqeError::Dimension { expected, got }
    }
}

impl From<std::io::Error> for DvqeError {
    fn from(e: std::io::Error) -> Self {
        DvqeError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, DvqeError>;
