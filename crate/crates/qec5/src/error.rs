use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension must be prime (got {0})")]
    NotPrime(u32),
    #[error("zero has no multiplicative inverse")]
    NoInverse,
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(u32, u32),
    #[error("length mismatch: {0} vs {1}")]
    LenMismatch(usize, usize),
    #[error("gate arity mismatch: {kind} expects {expected} targets, got {got}")]
    Arity { kind: String, expected: usize, got: usize },
    #[error("target {0} out of range")]
    TargetRange(usize),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("scheduling failed: {0}")]
    Schedule(String),
    #[error("probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("state of {0} amplitudes exceeds the memory budget")]
    MemoryBudget(u128),
    #[error("circuit is not scheduled")]
    Unscheduled,
    #[error("unsupported instruction for this backend: {0}")]
    Unsupported(String),
    #[error("event value out of range: {0}")]
    EventValue(u32),
    #[error("fit needs at least 3 points (got {0})")]
    TooFewPoints(usize),
    #[error("degenerate design matrix")]
    Degenerate,
    #[error("no finite threshold (b = {0} <= 1)")]
    NoThreshold(f64),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
