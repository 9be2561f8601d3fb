//! Reaction predictors: an HMM situation cascade, a mixture density network
//! over target accelerations and maximum-entropy IRL over trajectory costs.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cascade;
pub mod error;
pub mod gmm;
pub mod hmm;
pub mod irl;
pub mod math;
pub mod mdn;
pub mod model;

use reactbench_core::protogen::PrototypeSet;
use reactbench_core::{PredictionDistribution, SceneSample};

pub use cascade::{HmmPredictor, HmmPredictorConfig};
pub use error::{PredictorError, Result};
pub use irl::{IrlModel, IrlTrainConfig};
pub use mdn::{MdnPredictor, MdnTrainConfig};
pub use model::{ModelDocument, TrainedModel};

/// Conditional distribution over a sample's motion patterns.
pub trait Predictor {
    fn predict(&self, sample: &SceneSample, protos: &PrototypeSet) -> Result<PredictionDistribution>;
}
