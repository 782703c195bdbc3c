use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("wrong length: expected {expected}, got {got}")]
    WrongLength { expected: usize, got: usize },

    #[error("inconsistent linear system (0 = 1 after reduction)")]
    Inconsistent,

    #[error("infeasible parameters: {0}")]
    InfeasibleParams(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("decode failure: {0}")]
    DecodeFailure(String),

    #[error("construction invalid: {0}")]
    ConstructionInvalid(String),

    #[error(
        "enumeration too large: {count} schedules exceed the guard of {guard}; use randomized mode"
    )]
    EnumerationTooLarge { count: usize, guard: usize },

    #[error("relay cannot emit coordinate {coord} at time {time}: source symbol not decoded")]
    RelayUnavailable { coord: usize, time: usize },

    #[error("inadmissible erasure schedule: {0}")]
    InadmissibleSchedule(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
