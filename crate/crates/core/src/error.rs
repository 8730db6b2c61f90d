use thiserror::Error;

/// Errors raised by the simulator's numeric kernels and configuration layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input fell outside the domain on which a formula is defined.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// A caller violated a protocol precondition (e.g. emitting a caution from
    /// a node outside the safety zone).
    #[error("logic error in {op}: {detail}")]
    Logic { op: &'static str, detail: String },

    #[error("parse error: {0}")]
    Parse(String),

    /// Validation failures name the offending field.
    #[error("invalid value for `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn logic(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Logic {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
