use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Tensor shapes incompatible with the requested operation.
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    /// An input value or configuration field violates its contract.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A non-finite value appeared where finite math is required.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// A file could not be read or written.
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A persisted file failed validation; names the offending field.
    #[error("malformed {what}: field `{field}`: {detail}")]
    Format {
        what: &'static str,
        field: String,
        detail: String,
    },

    /// The clock strip could not be read with enough confidence.
    #[error("clock strip unreadable (confidence {confidence:.3})")]
    ClockUnreadable { confidence: f64 },
}

impl Error {
    pub fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(what: &'static str, field: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Format {
            what,
            field: field.into(),
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
