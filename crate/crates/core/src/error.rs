use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while reading the `t/v/e` graph text format.
#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: malformed record: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: duplicate vertex id {id}")]
    DuplicateVertex { line: usize, id: usize },
    #[error("line {line}: vertex id {found} out of order, expected {expected}")]
    VertexOutOfOrder {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: edge references unknown vertex {id}")]
    UnknownVertex { line: usize, id: usize },
    #[error("line {line}: self-loop on vertex {id}")]
    SelfLoop { line: usize, id: usize },
    #[error("line {line}: duplicate edge ({src}, {dst})")]
    DuplicateEdge { line: usize, src: usize, dst: usize },
    #[error("line {line}: vertex {id} declares degree {declared}, actual {actual}")]
    DegreeMismatch {
        line: usize,
        id: usize,
        declared: usize,
        actual: usize,
    },
    #[error("line {line}: header declares {declared} {what}, found {found}")]
    CountMismatch {
        line: usize,
        what: &'static str,
        declared: usize,
        found: usize,
    },
}

/// Errors raised while reading a policy checkpoint.
#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum CheckpointError {
    #[error("not a policy checkpoint (bad magic line)")]
    BadMagic,
    #[error("unsupported checkpoint version `{0}`")]
    Version(String),
    #[error("line {line}: dimension mismatch: {reason}")]
    Dimension { line: usize, reason: String },
    #[error("line {line}: corrupt checkpoint: {reason}")]
    Corrupt { line: usize, reason: String },
}

#[derive(Error, Debug)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Stream(#[from] io::Error),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("query extraction failed: {0}")]
    Extraction(String),
    #[error("query graph is disconnected")]
    DisconnectedQuery,
    #[error("invalid matching order: {0}")]
    InvalidOrder(String),
    #[error("size guard exceeded: {0}")]
    Guard(String),
    #[error("feature encoding: {0}")]
    Encoding(String),
    #[error("empty action space")]
    EmptyActionSpace,
    #[error("model: {0}")]
    Model(String),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("non-finite value during training: {0}")]
    NonFinite(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("training: {0}")]
    Training(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
