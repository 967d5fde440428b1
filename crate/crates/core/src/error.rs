//! Error type shared across the crate.

use std::fmt;
use std::io;

/// Errors produced by ingestion, summarization, and the file formats.
#[derive(Debug)]
pub enum Error {
    /// Underlying I/O failure.
    Io(io::Error),
    /// Malformed input data; `line` is 1-based when known, 0 otherwise.
    Parse { line: usize, msg: String },
    /// A request that violates an operation's preconditions.
    Invalid(String),
    /// Summary-file version or checksum problems.
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Io(e) => write!(f, "i/o error: {e}"),
            Error::Parse { line, msg } => {
                if *line > 0 {
                    write!(f, "parse error at line {line}: {msg}")
                } else {
                    write!(f, "parse error: {msg}")
                }
            }
            Error::Invalid(msg) => write!(f, "invalid request: {msg}"),
            Error::Format(msg) => write!(f, "format error: {msg}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<io::Error> for Error {
    fn from(e: io::Error) -> Self {
        Error::Io(e)
    }
}
