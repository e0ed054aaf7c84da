use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate statistics: {matrix} is not positive definite even with diagonal jitter {jitter:e}")]
    Degenerate { matrix: &'static str, jitter: f64 },

    #[error("non-finite gradient entry at row {row}, column {col}")]
    NonFiniteGradient { row: usize, col: usize },

    #[error("unsupported Boolean rule arity {0} (expected 2 or 3)")]
    UnsupportedArity(usize),

    #[error("parse error in `{field}`: {reason}")]
    Parse { field: String, reason: String },

    #[error("I/O error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(field: impl Into<String>, reason: impl ToString) -> Self {
        Error::Parse {
            field: field.into(),
            reason: reason.to_string(),
        }
    }

    /// Process exit code used by the command-line runner.
    ///
    /// 1 = configuration, 2 = runtime degeneracy, 3 = I/O and malformed files.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Shape(_) | Error::UnsupportedArity(_) => 1,
            Error::Degenerate { .. }
            | Error::NonFiniteGradient { .. }
            | Error::InsufficientData(_) => 2,
            Error::Parse { .. } | Error::Io { .. } | Error::Csv(_) => 3,
        }
    }
}
