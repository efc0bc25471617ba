use thiserror::Error;

/// Errors raised by the detector library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("matrix is not Hermitian (entry ({row}, {col}) deviates by {deviation:e})")]
    NotHermitian {
        row: usize,
        col: usize,
        deviation: f64,
    },

    #[error("channel vector {index} has zero norm")]
    ZeroChannel { index: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),

    #[error("invalid dimensions: {0}")]
    InvalidDims(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("moments do not define a proper Beta fit: {0}")]
    DegenerateMoments(String),

    #[error("argument outside domain: {0}")]
    DomainError(String),

    #[error("no convergence after {iterations} iterations in {routine}")]
    NoConvergence {
        routine: &'static str,
        iterations: usize,
    },

    #[error("insufficient trials: {trials} given, at least {required} needed")]
    InsufficientTrials { trials: u64, required: u64 },

    #[error("invalid scenario field `{field}`: {reason}")]
    InvalidScenario { field: &'static str, reason: String },
}

impl Error {
    /// True for errors caused by caller-supplied parameters rather than by a
    /// numerical breakdown.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidDims(_)
                | Error::DomainError(_)
                | Error::InsufficientTrials { .. }
                | Error::InvalidScenario { .. }
                | Error::TooLarge(_)
                | Error::ZeroChannel { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
