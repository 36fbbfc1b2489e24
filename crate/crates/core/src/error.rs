use thiserror::Error;

use crate::gev_mle::GevParams;

pub type Result<T, E = EvtError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvtError {
    /// Argument outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// Estimator tuning parameter out of its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Threshold order statistic is not strictly positive, so its log is undefined.
    #[error("non-positive threshold order statistic {0}")]
    NonPositiveThreshold(f64),

    #[error("index {index} out of range for {len} order statistics")]
    Index { index: usize, len: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("GEV fit did not converge after {iterations} iterations (best loglik {loglik})")]
    Convergence {
        best: GevParams,
        loglik: f64,
        iterations: usize,
    },

    /// A numeric oracle lost precision (underflow, cancellation); retry with smaller `t`.
    #[error("precision error: {0}")]
    Precision(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),
}

impl EvtError {
    /// True for errors caused by bad caller-supplied parameters rather than bad data.
    pub fn is_parameter_error(&self) -> bool {
        matches!(
            self,
            EvtError::Domain(_)
                | EvtError::Parameter(_)
                | EvtError::Index { .. }
                | EvtError::Config(_)
        )
    }
}
