use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised anywhere in the extraction, persistence and learning pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed container or header bytes.
    #[error("format error: {0}")]
    Format(String),
    /// Well-formed input that uses a feature this crate does not read.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// Payload shorter (or longer) than its header declares.
    #[error("length error: expected {expected} bytes, found {found}")]
    Length { expected: usize, found: usize },
    #[error("not found: {0}")]
    NotFound(String),
    /// Value outside the admissible range of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
