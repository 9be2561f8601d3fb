use reactbench_core::CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PredictorError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no training data: {0}")]
    EmptyData(String),

    #[error("all pattern likelihoods underflowed for sample {0}")]
    NumericalUnderflow(u64),

    #[error("training diverged at iteration {iteration}: objective {value}")]
    Divergence { iteration: usize, value: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("unsupported model document version {0}")]
    UnsupportedVersion(u32),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("model serialization: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = PredictorError> = std::result::Result<T, E>;
