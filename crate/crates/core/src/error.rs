use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("corrupt world snapshot: {0}")]
    Snapshot(String),

    #[error("unknown entity or target: {0}")]
    UnknownTarget(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unknown cost key `{key}` for action `{action}`")]
    UnknownCostKey { action: String, key: String },

    #[error("no executable plan")]
    NoExecutablePlan,

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Errors that should surface as a configuration failure (CLI exit code 2).
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Parse { .. }
                | Error::Io { .. }
                | Error::Domain(_)
                | Error::UnknownCostKey { .. }
                | Error::UnknownTarget(_)
        )
    }
}
