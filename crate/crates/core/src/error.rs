use thiserror::Error;

/// Errors raised by the library. Every fallible operation returns this type.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LaaksoError {
    #[error("invalid height window [{a}, {b}]")]
    InvalidWindow { a: String, b: String },
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("interval [{a}, {b}] is not a minimal height interval for the given points")]
    NotMinimal { a: String, b: String },
    #[error("points coincide; operation requires distinct points")]
    SamePoint,
    #[error("invalid level: {0}")]
    InvalidLevel(String),
    #[error("point {0} is not representable at the graph resolution")]
    NotRepresentable(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("infeasible construction: {0}")]
    Infeasible(String),
    #[error("line spec has {0} levels; use parallel_reduction for three or more")]
    TooManyLevels(usize),
    #[error("profile verification failed: {0}")]
    Verification(String),
}

pub type Result<T> = std::result::Result<T, LaaksoError>;
