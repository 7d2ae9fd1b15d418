use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the command line, each with a stable exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Data {
        context: String,
        #[source]
        source: dualmem::Error,
    },

    #[error("{0}")]
    Config(String),
}

impl CliError {
    /// 0 success, 1 usage, 2 I/O, 3 data or schema.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Io { .. } => 2,
            CliError::Data { source, .. } => match source {
                dualmem::Error::Io(_) => 2,
                dualmem::Error::Csv(e) if e.is_io_error() => 2,
                dualmem::Error::InvalidParameter { .. } | dualmem::Error::PhaseSetNotClosed { .. } => 1,
                _ => 3,
            },
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn data(context: impl Into<String>, source: dualmem::Error) -> Self {
        CliError::Data {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
