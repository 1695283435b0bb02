use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates an operation's precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A numeric procedure produced non-finite values or failed to converge.
    #[error("numeric failure: {0}")]
    NumericFailure(String),

    /// The requested quantity is mathematically undefined for this input.
    #[error("undefined result: {0}")]
    UndefinedResult(String),

    /// A config file could not be parsed or is missing required keys.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::NumericFailure(msg.into())
    }

    pub fn undefined(msg: impl Into<String>) -> Self {
        Error::UndefinedResult(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Process exit code for the CLI: 2 for usage/config problems, 3 for
    /// numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Config(_) | Error::Io(_) => 2,
            Error::NumericFailure(_) | Error::UndefinedResult(_) => 3,
        }
    }
}
