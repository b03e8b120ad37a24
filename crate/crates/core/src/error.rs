use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            column,
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("unsupported axiom `{axiom}`: {reason}")]
    Unsupported { axiom: String, reason: String },

    #[error("ontology still contains assertion `{0}`; eliminate the ABox first")]
    AboxPresent(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("no embedding for {kind} `{name}`")]
    MissingSymbol { kind: &'static str, name: String },

    #[error("class or relation index {0} is out of range for this embedding")]
    MissingRow(usize),

    #[error("non-finite loss in bucket {bucket}")]
    NonFiniteLoss { bucket: &'static str },

    #[error("theory has no axioms to train on")]
    EmptyTheory,

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("checkpoint version {found} is not supported (expected {expected})")]
    Version { expected: u32, found: u32 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
