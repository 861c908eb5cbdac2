use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot parse rational {input:?}: {reason}")]
    ParseRational { input: String, reason: &'static str },

    #[error("invalid surd threshold {a}x^2 + {b}x + {c}: {reason}")]
    InvalidThreshold {
        a: String,
        b: String,
        c: String,
        reason: &'static str,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("invalid instance field `{field}`: {reason}")]
    InvalidInstance { field: String, reason: String },

    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),

    #[error("index out of range: {what} {index} (limit {limit})")]
    OutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("unknown fixture {0:?}")]
    UnknownFixture(String),

    #[error("parameter out of range: {0}")]
    ParameterRange(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("soundness bug: {0}")]
    Soundness(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Schema(e.to_string())
    }
}
