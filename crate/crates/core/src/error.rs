use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PatternError {
    #[error("vertex u{0} does not exist")]
    UnknownVertex(usize),
    #[error("self-loop on u{0}")]
    SelfLoop(usize),
    #[error("edge (u{0}, u{1}) conflicts with an existing {2}")]
    ConstraintConflict(usize, usize, &'static str),
    #[error("no {2} between u{0} and u{1}")]
    MissingEdge(usize, usize, &'static str),
    #[error("patterns are limited to {0} vertices")]
    TooLarge(usize),
    #[error("unsupported size {size}: expected {min}..={max}")]
    UnsupportedSize { size: usize, min: usize, max: usize },
    #[error("core admits more than {0} vertex orderings")]
    TooManyOrderings(usize),
    #[error("invalid pattern: {0}")]
    Invalid(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("label given for unknown vertex {vertex} ({path}:{line})")]
    UnknownLabeledVertex {
        path: PathBuf,
        line: usize,
        vertex: u64,
    },
    #[error("graph has more than {} vertices", u32::MAX)]
    TooLarge,
    #[error("bad snapshot: {0}")]
    Snapshot(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
