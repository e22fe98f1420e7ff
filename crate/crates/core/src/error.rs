use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("corpus is empty: no token survives the vocabulary cutoff")]
    EmptyCorpus,

    #[error("input is not valid UTF-8 (byte offset {offset})")]
    Decode { offset: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: line {line}: {message}")]
    Parse {
        context: String,
        line: usize,
        message: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("no observed bigrams; cannot calibrate the weighting cutoff")]
    NoObservedBigrams,

    #[error("zero probability at ({row}, {col}); smooth the bigrams with kappa > 0 first")]
    Unsmoothed { row: usize, col: usize },

    #[error("singular ridge system for word {word:?}; use a positive regularization weight")]
    Singular { word: String },

    #[error("out-of-vocabulary tokens: {}", .tokens.join(", "))]
    OutOfVocabulary { tokens: Vec<String> },

    #[error("undefined: {0}")]
    Undefined(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(context: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            line,
            message: message.into(),
        }
    }

    /// Short stable identifier for the error kind, used by the command line front end.
    pub fn class(&self) -> &'static str {
        match self {
            Error::EmptyCorpus => "empty-corpus",
            Error::Decode { .. } => "decode",
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::Shape(_) => "shape",
            Error::Numeric(_) => "numeric",
            Error::NoObservedBigrams => "no-bigrams",
            Error::Unsmoothed { .. } => "unsmoothed",
            Error::Singular { .. } => "singular",
            Error::OutOfVocabulary { .. } => "out-of-vocabulary",
            Error::Undefined(_) => "undefined",
        }
    }
}
