use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("grid resolution {m} too small: need at least {min}")]
    ResolutionTooSmall { m: usize, min: usize },

    #[error("grid resolution {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("truncation mismatch: expected n = {expected}, found n = {found}")]
    TruncationMismatch { expected: usize, found: usize },

    #[error("mode ({k1}, {k2}) lies outside the truncation n = {n}")]
    ModeOutside { k1: i32, k2: i32, n: usize },

    #[error("beta = {0} violates the condition beta > 3")]
    InvalidBeta(f64),

    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),

    #[error("implicit midpoint did not converge after {iterations} iterations (residual {residual:e})")]
    MidpointNotConverged { iterations: usize, residual: f64 },

    #[error("step {index}: {source}")]
    Step { index: usize, source: Box<Error> },

    #[error("interaction between wavevectors ({0}, {1}) and ({2}, {3}) leaves the truncation")]
    UnresolvedInteraction(i32, i32, i32, i32),

    #[error("path saved every {0} steps; full step resolution is required")]
    InsufficientSaveResolution(usize),

    #[error("need at least {needed} paths, got {got}")]
    TooFewPaths { needed: usize, got: usize },
}
