use reactbench_core::datagen::DatagenError;
use reactbench_core::CoreError;
use reactbench_predictors::PredictorError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("configuration: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },

    #[error("training diverged: {0}")]
    Divergence(PredictorError),

    #[error("metric identity violated for {method}: residual {residual:e}")]
    Identity { method: String, residual: f64 },

    #[error("oracle check failed: {0}")]
    Oracle(String),

    #[error(transparent)]
    Datagen(DatagenError),

    #[error(transparent)]
    Predictor(PredictorError),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("malformed JSON in {context}: {source}")]
    Json { context: String, source: serde_json::Error },
}

impl BenchError {
    pub fn io(context: impl std::fmt::Display, source: std::io::Error) -> Self {
        BenchError::Io { context: context.to_string(), source }
    }

    pub fn json(context: impl std::fmt::Display, source: serde_json::Error) -> Self {
        BenchError::Json { context: context.to_string(), source }
    }

    /// Process exit code of the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) | BenchError::Datagen(DatagenError::ConfigInvalid(_)) => 2,
            BenchError::Io { .. } | BenchError::Datagen(DatagenError::Io(_)) | BenchError::Json { .. } => 3,
            BenchError::Divergence(_) => 4,
            BenchError::Identity { .. } => 5,
            BenchError::Oracle(_) => 6,
            _ => 1,
        }
    }
}

impl From<DatagenError> for BenchError {
    fn from(e: DatagenError) -> Self {
        match e {
            DatagenError::Io(io) => BenchError::io("dataset", io),
            other => BenchError::Datagen(other),
        }
    }
}

impl From<PredictorError> for BenchError {
    fn from(e: PredictorError) -> Self {
        match e {
            PredictorError::Divergence { .. } => BenchError::Divergence(e),
            other => BenchError::Predictor(other),
        }
    }
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;
