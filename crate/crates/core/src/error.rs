use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic in {0}: not an MSEV tensor file")]
    BadMagic(PathBuf),

    #[error("unsupported tensor {what} {value} in {path}")]
    Unsupported {
        path: PathBuf,
        what: &'static str,
        value: u32,
    },

    #[error("truncated payload in {path}: expected {expected} bytes, found {found}")]
    TruncatedPayload {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("numerical guard tripped: {0}")]
    Numerical(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("{0}")]
    Precondition(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
