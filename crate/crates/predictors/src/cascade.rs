//! Situation-then-reaction cascade: one HMM per interaction situation scores
//! the observed history, one GMM per situation scores each prototype's
//! displacement descriptor, and the two are combined over situations.

use serde::{Deserialize, Serialize};

use reactbench_core::protogen::PrototypeSet;
use reactbench_core::{PredictionDistribution, SceneSample, Situation, Trajectory};

use crate::error::{PredictorError, Result};
use crate::gmm::{Gmm, GmmConfig};
use crate::hmm::{baum_welch, BaumWelchConfig, GaussianHmm};
use crate::math::log_sum_exp;
use crate::Predictor;

/// Descriptor sample times after the current instant (s).
pub const DESCRIPTOR_TIMES: [f64; 3] = [1.0, 2.0, 3.0];

/// Per-frame history features: bumper gap from the target's front to the
/// host's rear, relative speed, target acceleration and lateral offset.
pub fn observation_sequence(sample: &SceneSample) -> Vec<Vec<f64>> {
    let host = sample.host_history();
    let target = sample.target_history();
    host.points()
        .iter()
        .zip(target.points())
        .enumerate()
        .map(|(i, (h, t))| vec![host.rear(i) - target.front(i), h.v - t.v, t.a, h.y - t.y])
        .collect()
}

/// Displacement of a future trajectory at the descriptor times.
pub fn descriptor(future: &Trajectory) -> Vec<f64> {
    let x0 = future.first().x;
    DESCRIPTOR_TIMES
        .iter()
        .map(|&s| {
            let i = ((s / future.dt()).round() as usize).min(future.len() - 1);
            future.points()[i].x - x0
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SituationModel {
    pub situation: Situation,
    pub hmm: GaussianHmm,
    pub gmm: Gmm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HmmPredictorConfig {
    pub n_states: usize,
    pub baum_welch: BaumWelchConfig,
    pub gmm: GmmConfig,
}

impl Default for HmmPredictorConfig {
    fn default() -> Self {
        Self { n_states: 3, baum_welch: BaumWelchConfig::default(), gmm: GmmConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmPredictor {
    pub config: HmmPredictorConfig,
    pub models: Vec<SituationModel>,
}

impl HmmPredictor {
    pub fn from_models(config: HmmPredictorConfig, models: Vec<SituationModel>) -> Result<Self> {
        if models.is_empty() {
            return Err(PredictorError::InvalidModel("cascade needs at least one situation".into()));
        }
        Ok(Self { config, models })
    }

    /// Trains one HMM and one GMM per situation on the samples labeled with it.
    /// Returns the predictor and each situation's Baum-Welch log-likelihood trace.
    pub fn fit(samples: &[SceneSample], config: HmmPredictorConfig) -> Result<(Self, Vec<Vec<f64>>)> {
        let mut models = Vec::new();
        let mut traces = Vec::new();
        for (k, situation) in Situation::ALL.into_iter().enumerate() {
            let group: Vec<&SceneSample> = samples.iter().filter(|s| s.situation == situation).collect();
            if group.is_empty() {
                return Err(PredictorError::EmptyData(format!("no training samples for situation {situation:?}")));
            }
            let seqs: Vec<Vec<Vec<f64>>> = group.iter().map(|s| observation_sequence(s)).collect();
            let bw = BaumWelchConfig { seed: config.baum_welch.seed.wrapping_add(k as u64), ..config.baum_welch };
            let (hmm, trace) = baum_welch(&seqs, config.n_states, &bw)?;
            let descriptors: Vec<Vec<f64>> = group.iter().map(|s| descriptor(&s.future_predicted)).collect();
            let gcfg = GmmConfig { seed: config.gmm.seed.wrapping_add(k as u64), ..config.gmm };
            let (gmm, _) = Gmm::fit(&descriptors, &gcfg)?;
            models.push(SituationModel { situation, hmm, gmm });
            traces.push(trace);
        }
        Ok((Self { config, models }, traces))
    }

    /// Normalized forward likelihoods of the sample history, in log space.
    pub fn log_situation_posterior(&self, sample: &SceneSample) -> Result<Vec<f64>> {
        let obs = observation_sequence(sample);
        let ll = self.models.iter().map(|m| m.hmm.forward_loglik(&obs)).collect::<Result<Vec<f64>>>()?;
        let z = log_sum_exp(&ll);
        if !z.is_finite() {
            return Err(PredictorError::NumericalUnderflow(sample.sample_id));
        }
        Ok(ll.iter().map(|l| l - z).collect())
    }

    /// `log f^k_j` for every situation `k` (rows) and prototype `j` (columns).
    pub fn log_pattern_densities(&self, protos: &PrototypeSet) -> Result<Vec<Vec<f64>>> {
        let descs: Vec<Vec<f64>> = protos.trajectories().iter().map(descriptor).collect();
        self.models
            .iter()
            .map(|m| descs.iter().map(|d| m.gmm.log_density(d)).collect())
            .collect()
    }
}

impl Predictor for HmmPredictor {
    fn predict(&self, sample: &SceneSample, protos: &PrototypeSet) -> Result<PredictionDistribution> {
        let log_p = self.log_situation_posterior(sample)?;
        let log_f = self.log_pattern_densities(protos)?;
        let scores: Vec<f64> = (0..protos.len())
            .map(|j| log_sum_exp(&log_p.iter().zip(&log_f).map(|(p, f)| p + f[j]).collect::<Vec<_>>()))
            .collect();
        if !scores.iter().any(|s| s.is_finite()) {
            return Err(PredictorError::NumericalUnderflow(sample.sample_id));
        }
        Ok(PredictionDistribution::from_log_weights(&scores)?)
    }
}
