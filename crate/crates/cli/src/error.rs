use simplex_conf_core::Error as CoreError;
use thiserror::Error;

/// Failures surfaced by the command-line tool, each with an exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("{0}")]
    ZeroCount(String),

    #[error("{0}")]
    Convergence(String),

    #[error("verification failed: {0}")]
    Verify(String),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("{0}")]
    Core(CoreError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Core(_) => 2,
            CliError::ZeroCount(_) => 3,
            CliError::Convergence(_) => 4,
            CliError::Verify(_) => 5,
            CliError::Io(_) => 6,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        match err {
            CoreError::ZeroCount { .. } => CliError::ZeroCount(err.to_string()),
            CoreError::Convergence { .. } => CliError::Convergence(err.to_string()),
            other => CliError::Core(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(err: csv::Error) -> Self {
        if err.is_io_error() {
            CliError::Io(err.to_string())
        } else {
            CliError::Parse(err.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
