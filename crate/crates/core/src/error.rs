use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("embedding dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("vector has zero norm")]
    ZeroNorm,
    #[error("non-finite component in vector")]
    NonFiniteComponent,
    #[error("clip needs at least {min} frames, got {found}")]
    TooFewFrames { min: usize, found: usize },
    #[error("timestamps must be strictly increasing (violated at position {0})")]
    TimestampsNotIncreasing(usize),
    #[error("{what}: expected length {expected}, found {found}")]
    LengthMismatch { what: &'static str, expected: usize, found: usize },
    #[error("frame index {index} out of range for clip of {len} frames")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("anchor and positive must differ (both {0})")]
    SameIndex(usize),
    #[error("bridge interval [{start}, {end}] is invalid")]
    InvalidInterval { start: usize, end: usize },
    #[error("time {t} lies outside interval [{start}, {end}]")]
    TimeOutsideInterval { t: u64, start: u64, end: u64 },
    #[error("selector produced an empty {0} set")]
    EmptySelection(&'static str),
    #[error("loss evaluated to a non-finite value")]
    NonFiniteValue,
    #[error("non-finite loss at step {step}")]
    NonFiniteLoss { step: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
