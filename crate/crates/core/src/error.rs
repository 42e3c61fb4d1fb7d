//! Error type shared across the crate.

use thiserror::Error;

/// Everything that can go wrong while building, fitting, or scoring a model.
#[derive(Debug, Error)]
pub enum Error {
    /// Bad user input: dimensions, ranges, malformed files, config mistakes.
    #[error("{0}")]
    InvalidInput(String),

    /// Numerical failure: singular systems, non-finite densities, degenerate
    /// samples.
    #[error("{0}")]
    Numerical(String),

    /// Filesystem problems while reading inputs or writing outputs.
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code used by the command-line interface: 1 for usage and
    /// input problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::Io { .. } => 1,
            Error::Numerical(_) => 2,
        }
    }
}
