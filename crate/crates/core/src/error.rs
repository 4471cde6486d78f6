use thiserror::Error;

/// Errors raised by the cascade, graph and estimator layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("budget exceeded: {what} needs {needed}, limit is {limit}")]
    Budget {
        what: &'static str,
        needed: u64,
        limit: u64,
    },

    #[error("no root of F(theta) = 1: {0}")]
    NoRoot(String),

    #[error("condition not satisfied: {0}")]
    Condition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("cut-set expansion did not terminate: {edges} edges emitted, {pending} rays still above delta at depth {depth}")]
    Nontermination {
        edges: usize,
        pending: usize,
        depth: usize,
    },

    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },

    #[error("statistical check failed: {0}")]
    Statistical(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Budget { .. } | Error::Nontermination { .. } => 3,
            Error::Statistical(_) => 4,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
