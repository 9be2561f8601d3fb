use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use reactbench_core::datagen::ScenarioConfig;
use reactbench_core::{CriticalityConfig, PrototypeConfig};
use reactbench_predictors::irl::FeatureConfig;
use reactbench_predictors::{HmmPredictorConfig, IrlTrainConfig, MdnTrainConfig};

use crate::error::{BenchError, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const FITTED_METHODS: [&str; 3] = ["hmm", "mdn", "irl"];
pub const BASELINES: [&str; 3] = ["uniform", "oracle-bayes", "adversarial"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    /// Scenario parameters; `scenario.seed` seeds the whole pipeline.
    pub scenario: ScenarioConfig,
    pub episodes: usize,
    pub train_fraction: f64,
    pub methods: Vec<String>,
    pub criticality: CriticalityConfig,
    pub prototypes: PrototypeConfig,
    pub hmm: HmmPredictorConfig,
    pub mdn: MdnTrainConfig,
    pub irl: IrlTrainConfig,
    pub irl_features: FeatureConfig,
    /// Target rollouts per sample for the oracle-bayes baseline.
    pub oracle_rollouts: usize,
    /// Additive count per pattern before normalizing rollout labels.
    pub oracle_smoothing: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            episodes: 200,
            train_fraction: 0.8,
            methods: FITTED_METHODS.iter().chain(&BASELINES).map(|s| s.to_string()).collect(),
            criticality: CriticalityConfig::default(),
            prototypes: PrototypeConfig::default(),
            hmm: HmmPredictorConfig::default(),
            mdn: MdnTrainConfig::default(),
            irl: IrlTrainConfig::default(),
            irl_features: FeatureConfig::default(),
            oracle_rollouts: 200,
            oracle_smoothing: 0.1,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate().map_err(|e| BenchError::Config(e.to_string()))?;
        self.prototypes.limits.validate().map_err(|e| BenchError::Config(e.to_string()))?;
        if self.episodes < 2 {
            return Err(BenchError::Config(format!("need at least 2 episodes, got {}", self.episodes)));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(BenchError::Config(format!("train fraction {} outside (0, 1)", self.train_fraction)));
        }
        if self.methods.is_empty() {
            return Err(BenchError::Config("no methods selected".into()));
        }
        if let Some(m) = self.methods.iter().find(|m| !FITTED_METHODS.contains(&m.as_str()) && !BASELINES.contains(&m.as_str())) {
            return Err(BenchError::Config(format!("unknown method {m}")));
        }
        if !(self.criticality.cr_max > 0.0) {
            return Err(BenchError::Config("cr_max must be positive".into()));
        }
        if self.oracle_rollouts == 0 || !(self.oracle_smoothing >= 0.0) {
            return Err(BenchError::Config("oracle baseline needs rollouts and non-negative smoothing".into()));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path.display(), e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = BenchConfig::default();
        cfg.validate().unwrap();
        let back: BenchConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg: BenchConfig = serde_json::from_str(r#"{"episodes": 12, "scenario": {"seed": 4}}"#).unwrap();
        assert_eq!(cfg.episodes, 12);
        assert_eq!(cfg.scenario.seed, 4);
        assert_eq!(cfg.scenario.dt, ScenarioConfig::default().dt);
    }

    #[test]
    fn rejects_bad_values() {
        for cfg in [
            BenchConfig { episodes: 0, ..BenchConfig::default() },
            BenchConfig { methods: vec![], ..BenchConfig::default() },
            BenchConfig { methods: vec!["lstm".into()], ..BenchConfig::default() },
            BenchConfig { train_fraction: 1.0, ..BenchConfig::default() },
        ] {
            assert!(matches!(cfg.validate(), Err(BenchError::Config(_))));
        }
    }
}
