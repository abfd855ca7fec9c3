use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by any mrkit operation.
///
/// The CLI maps these onto its exit-code convention: input/format problems
/// (shape mismatches, schema violations, I/O) exit with 2, semantic problems
/// with otherwise well-formed inputs (degenerate records, query-id mismatches)
/// exit with 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: shape mismatch: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("{op}: row {row} has zero norm")]
    ZeroNorm { op: &'static str, row: usize },

    #[error("{op}: {what} must not be empty")]
    Empty {
        op: &'static str,
        what: &'static str,
    },

    #[error("{op}: non-finite value: {detail}")]
    NonFinite { op: &'static str, detail: String },

    #[error("{op}: invalid value: {detail}")]
    Invalid { op: &'static str, detail: String },

    #[error("{path}: line {line}: {msg}")]
    Schema {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("record {id}: {msg}")]
    Degenerate { id: String, msg: String },

    #[error("query ids disagree: {0}")]
    QueryIdMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }

    pub fn invalid(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Invalid {
            op,
            detail: detail.into(),
        }
    }

    pub fn schema(path: impl Into<String>, line: usize, msg: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    pub fn degenerate(id: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Degenerate {
            id: id.into(),
            msg: msg.into(),
        }
    }

    /// Exit code a CLI command should use when this error aborts it.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Degenerate { .. } | Error::QueryIdMismatch(_) => 3,
            _ => 2,
        }
    }
}
