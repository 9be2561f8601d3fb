use thiserror::Error;

/// Errors raised by the shared domain types and pure operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid joint table: {0}")]
    InvalidJoint(String),

    #[error("conditioning row {row} has no probability mass")]
    ZeroMarginal { row: usize },

    #[error("pattern {pattern} out of range 1..={m}")]
    PatternOutOfRange { pattern: usize, m: usize },

    #[error("invalid pattern set: {0}")]
    InvalidPatternSet(String),

    #[error("invalid planner limits: {0}")]
    InvalidLimits(String),

    #[error("invalid evaluation set: {0}")]
    InvalidEvaluationSet(String),

    #[error("invalid scene sample: {0}")]
    InvalidSample(String),
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;
