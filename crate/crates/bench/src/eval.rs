//! Prediction and scoring of fitted models and reference baselines.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use reactbench_core::datagen::rollout_target_futures;
use reactbench_core::protogen::label_trajectory;
use reactbench_core::{
    criticality_profile, fatality_aware, generate_prototypes, CriticalityProfile, EvalRecord, EvaluationSet,
    MetricReport, PatternId, PredictionDistribution, PrototypeSet, SceneSample,
};
use reactbench_predictors::{Predictor, TrainedModel};

use crate::config::BenchConfig;
use crate::error::{BenchError, Result};

/// Tolerance of the row-level guard `B_c = G + C + D`.
pub const IDENTITY_TOL: f64 = 1e-12;

/// A test sample with its prototypes and criticality profile.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub sample: SceneSample,
    pub protos: PrototypeSet,
    pub profile: CriticalityProfile,
}

pub fn prepare(samples: Vec<SceneSample>, config: &BenchConfig) -> Result<Vec<Prepared>> {
    samples
        .into_par_iter()
        .map(|sample| {
            let protos = generate_prototypes(&sample, &config.prototypes)?;
            let profile = criticality_profile(&sample, &protos, &config.criticality);
            Ok(Prepared { sample, protos, profile })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub enum Method {
    Fitted(Box<TrainedModel>),
    Uniform,
    /// Label histogram of rollouts from the simulator's latent state.
    OracleBayes,
    /// One-hot on the pattern whose criticality is farthest from the truth.
    Adversarial,
}

impl Method {
    pub fn baseline(name: &str) -> Option<Self> {
        match name {
            "uniform" => Some(Method::Uniform),
            "oracle-bayes" => Some(Method::OracleBayes),
            "adversarial" => Some(Method::Adversarial),
            _ => None,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Method::Fitted(m) => m.method(),
            Method::Uniform => "uniform",
            Method::OracleBayes => "oracle-bayes",
            Method::Adversarial => "adversarial",
        }
    }
}

/// Non-ground-truth pattern maximizing `|cr_j - cr_gt|`, then distance in
/// pattern index from the ground truth, then the lower id.
pub fn adversarial_pattern(profile: &CriticalityProfile, gt: PatternId) -> PatternId {
    let g = gt.index();
    let mut best: Option<(usize, f64, usize)> = None;
    for (j, &c) in profile.cr.iter().enumerate() {
        if j == g {
            continue;
        }
        let key = ((c - profile.cr_gt).abs(), j.abs_diff(g));
        if best.is_none_or(|(_, d, k)| key.0 > d || (key.0 == d && key.1 > k)) {
            best = Some((j, key.0, key.1));
        }
    }
    PatternId::from_index(best.map_or(0, |b| b.0))
}

pub fn oracle_bayes(sample: &SceneSample, protos: &PrototypeSet, config: &BenchConfig) -> Result<PredictionDistribution> {
    let m = protos.len();
    let futures = rollout_target_futures(sample, &config.scenario, config.oracle_rollouts, config.scenario.seed)?;
    let mut counts = vec![config.oracle_smoothing; m];
    for f in &futures {
        counts[label_trajectory(f, protos).index()] += 1.0;
    }
    let total: f64 = counts.iter().sum();
    Ok(PredictionDistribution::new(counts.iter().map(|c| c / total).collect())?)
}

pub fn predict(method: &Method, p: &Prepared, config: &BenchConfig) -> Result<PredictionDistribution> {
    Ok(match method {
        Method::Fitted(model) => model.predict(&p.sample, &p.protos)?,
        Method::Uniform => PredictionDistribution::uniform(p.protos.len()),
        Method::OracleBayes => oracle_bayes(&p.sample, &p.protos, config)?,
        Method::Adversarial => {
            PredictionDistribution::one_hot(p.protos.len(), adversarial_pattern(&p.profile, p.sample.gt_pattern))?
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordOut {
    pub sample_id: u64,
    pub gt_pattern: usize,
    pub probs: Vec<f64>,
    pub cr: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: String,
    pub report: MetricReport,
    pub records: Vec<RecordOut>,
}

/// Predicts every sample in parallel, then scores sequentially in sample
/// order. Fails if the reported row breaks `B_c = G + C + D`.
pub fn evaluate(method: &Method, prepared: &[Prepared], config: &BenchConfig) -> Result<MethodResult> {
    let preds = prepared.par_iter().map(|p| predict(method, p, config)).collect::<Result<Vec<_>>>()?;
    let records: Vec<EvalRecord> = prepared
        .iter()
        .zip(preds)
        .map(|(p, prediction)| EvalRecord {
            sample_id: p.sample.sample_id,
            gt_pattern: p.sample.gt_pattern,
            prediction,
            criticality: p.profile.clone(),
        })
        .collect();
    let horizon = prepared.first().map_or(config.scenario.t_h, |p| p.sample.horizon);
    let set = EvaluationSet::new(records, horizon)?;
    let report = fatality_aware(&set);
    let residual = report.identity_residual();
    if !(residual <= IDENTITY_TOL) {
        return Err(BenchError::Identity { method: method.name().into(), residual });
    }
    let records = set
        .records()
        .iter()
        .map(|r| RecordOut {
            sample_id: r.sample_id,
            gt_pattern: r.gt_pattern.0,
            probs: r.prediction.probs().to_vec(),
            cr: r.criticality.cr.clone(),
        })
        .collect();
    Ok(MethodResult { method: method.name().into(), report, records })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adversarial_picks_farthest_then_index_distance() {
        let p = CriticalityProfile::from_values(vec![0.0, 0.5, 2.0, 0.1], PatternId(2));
        assert_eq!(adversarial_pattern(&p, PatternId(2)), PatternId(3));
        let flat = CriticalityProfile::from_values(vec![0.0; 4], PatternId(2));
        assert_eq!(adversarial_pattern(&flat, PatternId(2)), PatternId(4));
        let flat = CriticalityProfile::from_values(vec![0.0; 4], PatternId(4));
        assert_eq!(adversarial_pattern(&flat, PatternId(4)), PatternId(1));
    }
}
