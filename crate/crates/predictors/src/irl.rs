//! Maximum-entropy inverse reinforcement learning over a linear trajectory
//! cost. The partition function is approximated by the candidate set of each
//! demonstration: the sample's prototypes plus the demonstration itself.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use reactbench_core::protogen::{generate_prototypes, PrototypeConfig, PrototypeSet};
use reactbench_core::{PredictionDistribution, SceneSample, Trajectory};

use crate::error::{PredictorError, Result};
use crate::math::log_sum_exp;
use crate::Predictor;

pub const FEATURE_NAMES: [&str; 5] =
    ["mean_sq_accel", "mean_sq_jerk", "mean_sq_speed_deviation", "proximity", "terminal_gap"];
pub const N_FEATURES: usize = FEATURE_NAMES.len();

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    /// Length scale of the proximity feature (m).
    pub gap_scale: f64,
    /// Desired speed; `None` uses the sample's speed limit (m/s).
    pub desired_speed: Option<f64>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self { gap_scale: 5.0, desired_speed: None }
    }
}

fn trapezoid_mean(values: &[f64], dt: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return values.first().copied().unwrap_or(0.0);
    }
    let area: f64 = values.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dt).sum();
    area / ((n - 1) as f64 * dt)
}

/// Unstandardized features of a candidate target future. Proximity and the
/// terminal gap are measured against the host's ground-truth future.
pub fn raw_features(traj: &Trajectory, sample: &SceneSample, cfg: &FeatureConfig) -> [f64; N_FEATURES] {
    let host = &sample.future_host;
    let dt = traj.dt();
    let pts = traj.points();
    let n = pts.len().min(host.len());
    let v_des = cfg.desired_speed.unwrap_or(sample.context.speed_limit);
    let half = 0.5 * (traj.length() + host.length());

    let a2: Vec<f64> = pts[..n].iter().map(|p| p.a * p.a).collect();
    let dev2: Vec<f64> = pts[..n].iter().map(|p| (p.v - v_des).powi(2)).collect();
    let prox: Vec<f64> = (0..n)
        .map(|k| {
            let gap = ((host.points()[k].x - pts[k].x).abs() - half).max(0.0);
            (-gap / cfg.gap_scale).exp()
        })
        .collect();
    let jerk2 = if n < 2 {
        0.0
    } else {
        pts[..n].windows(2).map(|w| ((w[1].a - w[0].a) / dt).powi(2)).sum::<f64>() / (n - 1) as f64
    };
    [
        trapezoid_mean(&a2, dt),
        jerk2,
        trapezoid_mean(&dev2, dt),
        trapezoid_mean(&prox, dt),
        host.rear(n - 1) - traj.front(n - 1),
    ]
}

/// One demonstration: candidate feature vectors and the index of the
/// demonstrated one.
#[derive(Debug, Clone, PartialEq)]
pub struct Demo {
    pub candidates: Vec<Vec<f64>>,
    pub chosen: usize,
}

fn costs(theta: &[f64], candidates: &[Vec<f64>]) -> Vec<f64> {
    candidates.iter().map(|f| f.iter().zip(theta).map(|(a, b)| a * b).sum()).collect()
}

/// Softmax of negated costs with max subtraction.
pub fn softmax_neg(costs: &[f64]) -> Vec<f64> {
    let neg: Vec<f64> = costs.iter().map(|c| -c).collect();
    let z = log_sum_exp(&neg);
    neg.iter().map(|n| (n - z).exp()).collect()
}

/// Log-likelihood of the demonstrations and its gradient in `theta`.
pub fn irl_loglik_grad(theta: &[f64], demos: &[Demo]) -> Result<(f64, Vec<f64>)> {
    let mut ll = 0.0;
    let mut grad = vec![0.0; theta.len()];
    for demo in demos {
        if demo.chosen >= demo.candidates.len() {
            return Err(PredictorError::InvalidModel("demonstration index outside its candidate set".into()));
        }
        if let Some(f) = demo.candidates.iter().find(|f| f.len() != theta.len()) {
            return Err(PredictorError::DimensionMismatch { expected: theta.len(), got: f.len() });
        }
        let c = costs(theta, &demo.candidates);
        let neg: Vec<f64> = c.iter().map(|x| -x).collect();
        let z = log_sum_exp(&neg);
        ll += neg[demo.chosen] - z;
        for (f, n) in demo.candidates.iter().zip(&neg) {
            let p = (n - z).exp();
            for (g, fi) in grad.iter_mut().zip(f) {
                *g += p * fi;
            }
        }
        for (g, fi) in grad.iter_mut().zip(&demo.candidates[demo.chosen]) {
            *g -= fi;
        }
    }
    Ok((ll, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IrlTrainConfig {
    pub lr: f64,
    pub iters: usize,
    pub seed: u64,
}

impl Default for IrlTrainConfig {
    fn default() -> Self {
        Self { lr: 10.0, iters: 2000, seed: 0 }
    }
}

const MAX_HALVINGS: usize = 20;

/// Gradient ascent on the mean log-likelihood with step halving whenever a
/// step would decrease it. Returns `theta` and the log-likelihood trace.
pub fn train_theta(demos: &[Demo], dim: usize, cfg: &IrlTrainConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    if demos.is_empty() {
        return Err(PredictorError::EmptyData("no demonstrations".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut theta: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.01..0.01)).collect();
    let scale = 1.0 / demos.len() as f64;
    let (mut ll, mut grad) = irl_loglik_grad(&theta, demos)?;
    let mut trace = vec![ll];
    for iteration in 0..cfg.iters {
        if !ll.is_finite() {
            return Err(PredictorError::Divergence { iteration, value: ll });
        }
        let mut step = cfg.lr * scale;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let cand: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t + step * g).collect();
            let (cll, cgrad) = irl_loglik_grad(&cand, demos)?;
            if cll >= ll {
                accepted = Some((cand, cll, cgrad));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, cll, cgrad)) = accepted else { break };
        let done = cll - ll <= 1e-12 * ll.abs().max(1.0);
        theta = cand;
        ll = cll;
        grad = cgrad;
        trace.push(ll);
        if done {
            break;
        }
    }
    Ok((theta, trace))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrlModel {
    pub theta: Vec<f64>,
    pub feature_names: Vec<String>,
    pub feature_config: FeatureConfig,
    pub feature_mean: Vec<f64>,
    pub feature_std: Vec<f64>,
    pub prototypes: PrototypeConfig,
    pub train: IrlTrainConfig,
}

impl IrlModel {
    pub fn standardize(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter().zip(&self.feature_mean).zip(&self.feature_std).map(|((x, m), s)| (x - m) / s).collect()
    }

    pub fn features(&self, traj: &Trajectory, sample: &SceneSample) -> Vec<f64> {
        self.standardize(&raw_features(traj, sample, &self.feature_config))
    }

    pub fn cost(&self, traj: &Trajectory, sample: &SceneSample) -> f64 {
        self.features(traj, sample).iter().zip(&self.theta).map(|(a, b)| a * b).sum()
    }

    fn validate(&self) -> Result<()> {
        let d = self.theta.len();
        if [self.feature_names.len(), self.feature_mean.len(), self.feature_std.len()].iter().any(|&n| n != d) {
            return Err(PredictorError::InvalidModel("feature configuration and theta differ in length".into()));
        }
        if d != N_FEATURES {
            return Err(PredictorError::DimensionMismatch { expected: N_FEATURES, got: d });
        }
        if self.theta.iter().chain(&self.feature_mean).any(|v| !v.is_finite())
            || self.feature_std.iter().any(|s| !(s.is_finite() && *s > 0.0))
        {
            return Err(PredictorError::InvalidModel("non-finite weights or standardization".into()));
        }
        Ok(())
    }

    /// Fits on the ground-truth futures of `samples`, each contrasted with
    /// its own prototype set.
    pub fn fit(
        samples: &[SceneSample],
        prototypes: PrototypeConfig,
        feature_config: FeatureConfig,
        train: IrlTrainConfig,
    ) -> Result<(Self, Vec<f64>)> {
        if samples.is_empty() {
            return Err(PredictorError::EmptyData("no training samples".into()));
        }
        let mut raw_sets = Vec::with_capacity(samples.len());
        for s in samples {
            let protos = generate_prototypes(s, &prototypes)?;
            let mut set: Vec<[f64; N_FEATURES]> =
                protos.trajectories().iter().map(|p| raw_features(p, s, &feature_config)).collect();
            set.push(raw_features(&s.future_predicted, s, &feature_config));
            raw_sets.push(set);
        }
        let all: Vec<&[f64; N_FEATURES]> = raw_sets.iter().flatten().collect();
        let n = all.len() as f64;
        let mean: Vec<f64> = (0..N_FEATURES).map(|i| all.iter().map(|f| f[i]).sum::<f64>() / n).collect();
        let std: Vec<f64> = (0..N_FEATURES)
            .map(|i| {
                let s = (all.iter().map(|f| (f[i] - mean[i]).powi(2)).sum::<f64>() / n).sqrt();
                if s > 1e-9 { s } else { 1.0 }
            })
            .collect();
        let mut model = Self {
            theta: vec![0.0; N_FEATURES],
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            feature_config,
            feature_mean: mean,
            feature_std: std,
            prototypes,
            train,
        };
        let demos: Vec<Demo> = raw_sets
            .iter()
            .map(|set| Demo { candidates: set.iter().map(|f| model.standardize(f)).collect(), chosen: set.len() - 1 })
            .collect();
        let (theta, trace) = train_theta(&demos, N_FEATURES, &train)?;
        model.theta = theta;
        model.validate()?;
        Ok((model, trace))
    }

    pub fn from_parts(
        theta: Vec<f64>,
        feature_config: FeatureConfig,
        feature_mean: Vec<f64>,
        feature_std: Vec<f64>,
        prototypes: PrototypeConfig,
        train: IrlTrainConfig,
    ) -> Result<Self> {
        let model = Self {
            theta,
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            feature_config,
            feature_mean,
            feature_std,
            prototypes,
            train,
        };
        model.validate()?;
        Ok(model)
    }
}

impl Predictor for IrlModel {
    fn predict(&self, sample: &SceneSample, protos: &PrototypeSet) -> Result<PredictionDistribution> {
        let c: Vec<f64> = protos.trajectories().iter().map(|p| self.cost(p, sample)).collect();
        Ok(PredictionDistribution::new(softmax_neg(&c))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_theta_gradient_is_mean_minus_demo() {
        let demos = vec![Demo { candidates: vec![vec![1.0, 0.0], vec![3.0, 2.0], vec![2.0, 4.0]], chosen: 0 }];
        let (ll, g) = irl_loglik_grad(&[0.0, 0.0], &demos).unwrap();
        assert!((ll + 3f64.ln()).abs() < 1e-15);
        assert!((g[0] - 1.0).abs() < 1e-15 && (g[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn two_point_softmax() {
        let p = softmax_neg(&[0.0, 3f64.ln()]);
        assert!((p[0] - 0.75).abs() < 1e-15 && (p[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn bad_demo_index() {
        let demos = vec![Demo { candidates: vec![vec![1.0]], chosen: 1 }];
        assert!(irl_loglik_grad(&[0.0], &demos).is_err());
    }

    #[test]
    fn trapezoid_of_constant() {
        assert!((trapezoid_mean(&[2.0; 7], 0.1) - 2.0).abs() < 1e-12);
    }
}
