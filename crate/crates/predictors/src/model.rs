//! Versioned JSON persistence for trained predictors.

use std::path::Path;

use serde::{Deserialize, Serialize};

use reactbench_core::protogen::PrototypeSet;
use reactbench_core::{PredictionDistribution, SceneSample};

use crate::cascade::HmmPredictor;
use crate::error::{PredictorError, Result};
use crate::irl::IrlModel;
use crate::mdn::MdnPredictor;
use crate::Predictor;

pub const FORMAT: &str = "reactbench-model";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrainedModel {
    Hmm(HmmPredictor),
    Mdn(MdnPredictor),
    Irl(IrlModel),
}

impl TrainedModel {
    pub fn method(&self) -> &'static str {
        match self {
            TrainedModel::Hmm(_) => "hmm",
            TrainedModel::Mdn(_) => "mdn",
            TrainedModel::Irl(_) => "irl",
        }
    }
}

impl Predictor for TrainedModel {
    fn predict(&self, sample: &SceneSample, protos: &PrototypeSet) -> Result<PredictionDistribution> {
        match self {
            TrainedModel::Hmm(m) => m.predict(sample, protos),
            TrainedModel::Mdn(m) => m.predict(sample, protos),
            TrainedModel::Irl(m) => m.predict(sample, protos),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub version: u32,
    pub method: String,
    pub model: TrainedModel,
}

impl ModelDocument {
    pub fn new(model: TrainedModel) -> Self {
        Self { format: FORMAT.into(), version: VERSION, method: model.method().into(), model }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        if value.get("format").and_then(|f| f.as_str()) != Some(FORMAT) {
            return Err(PredictorError::InvalidModel("not a model document".into()));
        }
        match value.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == VERSION as u64 => {}
            Some(v) => return Err(PredictorError::UnsupportedVersion(v.min(u32::MAX as u64) as u32)),
            None => return Err(PredictorError::InvalidModel("missing version".into())),
        }
        let doc: Self = serde_json::from_value(value)?;
        if doc.method != doc.model.method() {
            return Err(PredictorError::InvalidModel(format!("method {} does not match model {}", doc.method, doc.model.method())));
        }
        Ok(doc)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let text = self.to_json().map_err(std::io::Error::other)?;
        std::fs::write(path, text)
    }

    pub fn load(path: &Path) -> std::result::Result<Self, LoadError> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self::from_json(&text)?)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Model(#[from] PredictorError),
}
