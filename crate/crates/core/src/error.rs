//! Error type shared by every module of the crate.

use std::path::PathBuf;

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed record: {message}")]
    MalformedRecord {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: language `{lang}` is not declared in the manifest")]
    UnknownLanguage {
        path: PathBuf,
        line: usize,
        lang: String,
    },

    #[error("empty language partition for `{0}`")]
    EmptyPartition(String),

    #[error("dev corpus is not aligned: {0}")]
    Alignment(String),

    #[error("missing dev file for language `{lang}` at {path}")]
    MissingLanguageFile { lang: String, path: PathBuf },

    #[error("unsupported model format `{found}` (expected `{expected}`)")]
    VersionMismatch { expected: String, found: String },

    #[error("model line {line}: {message}")]
    ModelFormat { line: usize, message: String },

    #[error("token `{0}` is not in the vocabulary")]
    UnknownToken(String),

    #[error("token id {0} is not in the vocabulary")]
    UnknownTokenId(u64),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error: 1 usage, 2 data, 3 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) => 1,
            Error::Invariant(_) => 3,
            _ => 2,
        }
    }
}
