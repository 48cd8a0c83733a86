use std::io;

use thiserror::Error;

/// Errors raised by the solvers, the coefficient parser and the sweep I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter combination that cannot produce a meaningful run.
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument outside the domain of the operation.
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("grid shape mismatch: expected {expected}x{expected}, got {found}x{found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("cannot parse coefficient expression at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    /// The free boundary did not reach the gate within the step budget.
    #[error("no breakthrough after {steps} steps (t = {time})")]
    Timeout { steps: usize, time: f64 },

    #[error("bad checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub(crate) fn argument(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}
