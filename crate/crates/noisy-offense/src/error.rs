use std::io;
use std::path::PathBuf;

use crate::adapter::AdapterError;
use crate::model_io::ModelFileError;

/// A problem with an input or output file. Row-level errors carry the
/// 1-based line number.
#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: expected header {expected:?}, found {found:?}")]
    Header { path: PathBuf, expected: String, found: String },
    #[error("{path}:{line}: {message}")]
    Row { path: PathBuf, line: usize, message: String },
    #[error("{path}: {message}")]
    Content { path: PathBuf, message: String },
}

impl DataError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        DataError::Io { path: path.into(), source }
    }

    pub fn row(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        DataError::Row { path: path.into(), line, message: message.into() }
    }

    pub fn content(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        DataError::Content { path: path.into(), message: message.into() }
    }
}

/// Top-level error for pipeline commands. Each variant maps to one process
/// exit code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelFileError),
    #[error("adapter: {0}")]
    Adapter(#[from] AdapterError),
    #[error("stage {stage} failed: {source}")]
    Stage { stage: &'static str, source: Box<Error> },
}

impl Error {
    pub fn config(msg: impl std::fmt::Display) -> Self {
        Error::Config(msg.to_string())
    }

    /// 0 success, 1 usage/config, 2 data, 3 adapter/protocol.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Config(_) => 1,
            Error::Data(_) | Error::Model(_) => 2,
            Error::Adapter(_) => 3,
            Error::Stage { source, .. } => source.exit_code(),
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage { stage, source: Box::new(e) },
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
