use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid distribution spec: {0}")]
    Spec(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// An integrand produced NaN; `index` is the first offending weight draw.
    #[error("integrand returned NaN at weight draw {index}")]
    Evaluation { index: usize },

    #[error("missing capability: {0}")]
    Capability(String),

    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("ingest error in {}: {message}", path.display())]
    Ingest { path: PathBuf, message: String },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn ingest(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Ingest {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: numerical failures are 2, everything else 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Evaluation { .. } => 2,
            _ => 1,
        }
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
