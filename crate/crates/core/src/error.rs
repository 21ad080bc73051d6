use thiserror::Error;

/// Errors surfaced by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the operation's domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The requested computation exceeds a configured enumeration or trial budget.
    #[error("budget exceeded: {what} needs {required} units, limit is {limit}")]
    Budget {
        what: String,
        required: f64,
        limit: f64,
    },

    /// The input is degenerate for the requested quantity (e.g. a zero denominator).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A weight model cannot be sampled or enumerated as configured.
    #[error("weight model error: {0}")]
    Model(String),

    /// A structured object failed validation.
    #[error("validation failed: {0}")]
    Validation(String),

    /// A self-check failed. This always indicates a bug.
    #[error("internal check failed: {0}")]
    Internal(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn budget(what: impl Into<String>, required: f64, limit: f64) -> Self {
        Error::Budget {
            what: what.into(),
            required,
            limit,
        }
    }

    /// Process exit code for the CLI: 2 on budget refusal, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Budget { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
