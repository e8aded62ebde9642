//! Error taxonomy shared across the crate.
//!
//! Every fallible operation returns [`crate::Result`]. Variants carry enough
//! context (paths, line numbers, offending keys) that a CLI can print the
//! message as-is and a caller can still match on the failure class.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Underlying I/O failure while reading or writing a file.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A line in an input file could not be parsed. Line numbers are 1-based.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    /// Structurally valid input that violates a dataset-level requirement,
    /// e.g. an edge referencing a node absent from the content file.
    #[error("invalid dataset: {0}")]
    Dataset(String),

    /// A lookup against a built structure failed (unknown node, missing pair).
    #[error("lookup failed: {0}")]
    Lookup(String),

    /// Invalid configuration (dimensions, rates, fractions out of range).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Numeric-domain violation: negative or non-finite values where a
    /// probability distribution was required.
    #[error("domain error: {0}")]
    Domain(String),

    /// The training loss became NaN or infinite.
    #[error("training diverged at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },

    /// An edge split could not be produced under its constraints.
    #[error("split error: {0}")]
    Split(String),

    /// An evaluation task was asked to do something unsupported,
    /// e.g. node classification on embeddings of the wrong kind.
    #[error("task error: {0}")]
    Task(String),

    /// A metric was evaluated on degenerate input (empty, single-class).
    #[error("metric error: {0}")]
    Metric(String),
}

impl Error {
    /// Shorthand used by the loaders: wrap an `io::Error` with its path.
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Shorthand for a parse failure at a 1-based line number.
    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
