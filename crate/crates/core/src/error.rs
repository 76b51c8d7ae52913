use thiserror::Error;

pub type Result<T, E = FirmError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FirmError {
    /// A constructor or operation received parameters outside its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A ratio-type measure whose denominator is zero.
    #[error("{measure} is undefined: {reason}")]
    UndefinedMeasure {
        measure: &'static str,
        reason: String,
    },

    #[error("record {record}: category {category} out of range (expected < {categories})")]
    CategoryOutOfRange {
        record: usize,
        category: usize,
        categories: usize,
    },

    /// Scoring with a positive discounting distance needs real-valued observations.
    #[error("a real-valued observation is required when a > 0")]
    RealObservationRequired,

    #[error("root finder did not converge after {iterations} iterations (bracket [{lo}, {hi}])")]
    SolverFailure { iterations: usize, lo: f64, hi: f64 },

    #[error("series mismatch: {0}")]
    SeriesMismatch(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("non-positive long-run variance estimate {0:e}; consider the block bootstrap")]
    NonPositiveVariance(f64),

    #[error("malformed table: {0}")]
    MalformedTable(String),
}

impl FirmError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        FirmError::InvalidParameter(msg.into())
    }

    pub(crate) fn undefined(measure: &'static str, reason: impl Into<String>) -> Self {
        FirmError::UndefinedMeasure {
            measure,
            reason: reason.into(),
        }
    }
}
