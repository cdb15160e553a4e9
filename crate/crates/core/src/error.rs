use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value {value} for {what}")]
    NonFinite { what: &'static str, value: f64 },

    #[error("nearest-neighbor index is empty")]
    EmptyIndex,

    #[error("Sobol dimension {0} exceeds the tabulated direction numbers")]
    SobolDimension(usize),

    #[error("Sobol point count {0} out of range")]
    SobolCount(u64),

    #[error("quantile argument {0} outside (0, 1)")]
    OutOfUnitInterval(f64),

    #[error("truncated normal rejection failed on axis {axis} after {tries} tries")]
    RejectionFailed { axis: usize, tries: usize },

    #[error("solver did not converge at time step {step} (residual {residual:e})")]
    SolverDiverged { step: usize, residual: f64 },

    #[error("objective evaluation failed: {0}")]
    Evaluation(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
