//! Crate-wide error type. Variants map onto distinct CLI exit codes, so keep
//! the classification stable: `Usage` for caller mistakes, `Config` for bad
//! configuration, `Parse`/`Data`/`Domain` for bad inputs, `Training` for
//! runtime faults in the learning loop.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside an operation's mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid or inconsistent configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Malformed grid or report file; positions are 1-based.
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    /// Structurally valid input whose content is unusable.
    #[error("data error: {0}")]
    Data(String),

    /// API misuse by the caller.
    #[error("usage error: {0}")]
    Usage(String),

    /// Checkpoint that cannot back the configured agent.
    #[error("checkpoint load error: {0}")]
    Load(String),

    /// Trajectory violating the motion constraints.
    #[error("trajectory validation error: {0}")]
    Validation(String),

    /// Non-finite loss or other fault inside a training run.
    #[error("training fault: {0}")]
    Training(String),

    /// Degenerate arithmetic (e.g. division by zero) in report computation.
    #[error("computation error: {0}")]
    Computation(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn parse(line: usize, col: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, col, msg: msg.into() }
    }
}
