use thiserror::Error;

use crate::model::{Phase, SubfileId};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("integer overflow computing {0}")]
    Overflow(String),

    #[error("invalid system parameters: {0}")]
    InvalidParams(String),

    #[error("invalid demand: {0}")]
    InvalidDemand(String),

    #[error("invalid subfile: {0}")]
    InvalidSubfile(String),

    #[error("file {file} has {actual} bytes, expected {expected}")]
    FileLength { file: usize, expected: usize, actual: usize },

    #[error("inconsistent leader set: {0}")]
    InconsistentLeaders(String),

    #[error("envelope needs at least one point")]
    EmptyEnvelope,

    #[error("query {query} outside domain [{lo}, {hi}]")]
    OutOfDomain { query: String, lo: String, hi: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("scheme invariant violated: {0}")]
    SchemeInvariant(String),
}

/// A decode failure. Any of these means the delivery scheme (or a tampered
/// log) left a user unable to finish; it is never an expected outcome.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("phase {phase}: operand {subfile} not available")]
    MissingOperand { subfile: SubfileId, phase: Phase },

    #[error("subfile {subfile} never recovered (expected from phase {phase})")]
    Unrecovered { subfile: SubfileId, phase: Phase },

    #[error("malformed log: {0}")]
    MalformedLog(String),
}
