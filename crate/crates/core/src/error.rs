use thiserror::Error;

/// Errors raised by field construction, numerics and stepping.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {left:?} vs {right:?}")]
    GridMismatch { left: Vec<usize>, right: Vec<usize> },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("wave vector {wave_vector:?} is not resolved by grid {shape:?}")]
    BeyondNyquist {
        wave_vector: Vec<i64>,
        shape: Vec<usize>,
    },
    #[error("density {min} below floor {floor}")]
    DensityFloor { min: f64, floor: f64 },
    #[error("negative argument {0} where a nonnegative value is required")]
    Negative(f64),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("stable step underflow at t = {time}: the solution is blowing up")]
    StepUnderflow { time: f64 },
    #[error("trajectory does not record every step (stride {0}); residual probes need stride 1")]
    StrideTooCoarse(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
