use std::fmt;
use std::path::Path;

use tapkin_core::Error;

/// Failure of a command. Input errors exit with 2, internal ones with 3.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Internal(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError::Input(message.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    /// Core error raised while handling `path`; the path is prefixed unless
    /// the message already names it.
    pub fn at(path: &Path, err: Error) -> Self {
        let message = match err {
            Error::Io { .. } => err.to_string(),
            _ => format!("{}: {err}", path.display()),
        };
        if err.is_internal() {
            CliError::Internal(message)
        } else {
            CliError::Input(message)
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Input(format!("{}: {err}", path.display()))
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        if err.is_internal() {
            CliError::Internal(err.to_string())
        } else {
            CliError::Input(err.to_string())
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => f.write_str(m),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}
