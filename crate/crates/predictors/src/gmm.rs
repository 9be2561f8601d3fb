use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PredictorError, Result};
use crate::math::{log_sum_exp, moments, quantile_means, DiagGaussian};

/// Gaussian mixture with diagonal covariances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gmm {
    weights: Vec<f64>,
    components: Vec<DiagGaussian>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GmmConfig {
    pub components: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
    pub var_floor: f64,
}

impl Default for GmmConfig {
    fn default() -> Self {
        Self { components: 3, max_iter: 200, tol: 1e-8, seed: 0, var_floor: crate::hmm::VAR_FLOOR }
    }
}

impl Gmm {
    pub fn new(weights: Vec<f64>, components: Vec<DiagGaussian>) -> Result<Self> {
        if weights.is_empty() || weights.len() != components.len() {
            return Err(PredictorError::InvalidModel("mixture weights and components differ in count".into()));
        }
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|&w| !(w >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(PredictorError::InvalidModel("mixture weights are not a simplex".into()));
        }
        let d = components[0].dim();
        if let Some(c) = components.iter().find(|c| c.dim() != d || c.var.len() != d) {
            return Err(PredictorError::DimensionMismatch { expected: d, got: c.dim() });
        }
        Ok(Self { weights, components })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[DiagGaussian] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        let terms = self
            .weights
            .iter()
            .zip(&self.components)
            .map(|(w, c)| Ok(w.ln() + c.log_pdf(x)?))
            .collect::<Result<Vec<f64>>>()?;
        Ok(log_sum_exp(&terms))
    }

    /// Fits by expectation maximization from quantile-chunk means.
    pub fn fit(data: &[Vec<f64>], cfg: &GmmConfig) -> Result<(Self, Vec<f64>)> {
        if data.is_empty() || cfg.components == 0 {
            return Err(PredictorError::EmptyData("mixture fit needs data and at least one component".into()));
        }
        let d = data[0].len();
        if let Some(x) = data.iter().find(|x| x.len() != d) {
            return Err(PredictorError::DimensionMismatch { expected: d, got: x.len() });
        }
        let k = cfg.components.min(data.len());
        let rows: Vec<&[f64]> = data.iter().map(|x| x.as_slice()).collect();
        let (_, var) = moments(&rows, d);
        let var: Vec<f64> = var.iter().map(|v| v.max(cfg.var_floor)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let components = quantile_means(&rows, k, d)
            .into_iter()
            .map(|m| DiagGaussian {
                mean: m.iter().zip(&var).map(|(m, v)| m + 0.01 * v.sqrt() * rng.gen_range(-1.0..1.0)).collect(),
                var: var.clone(),
            })
            .collect();
        let mut gmm = Gmm::new(vec![1.0 / k as f64; k], components)?;

        let mut history = Vec::new();
        let mut resp = vec![vec![0.0; k]; data.len()];
        for iteration in 0..cfg.max_iter {
            let mut ll = 0.0;
            for (x, r) in data.iter().zip(resp.iter_mut()) {
                for (j, (w, c)) in gmm.weights.iter().zip(&gmm.components).enumerate() {
                    r[j] = w.ln() + c.log_pdf(x)?;
                }
                let z = log_sum_exp(r);
                ll += z;
                r.iter_mut().for_each(|v| *v = (*v - z).exp());
            }
            if !ll.is_finite() {
                return Err(PredictorError::Divergence { iteration, value: ll });
            }
            if history.last().is_some_and(|&prev: &f64| ll - prev < cfg.tol) {
                history.push(ll);
                return Ok((gmm, history));
            }
            history.push(ll);

            let mut weights = Vec::with_capacity(k);
            let mut comps = Vec::with_capacity(k);
            for j in 0..k {
                let nj: f64 = resp.iter().map(|r| r[j]).sum();
                if nj <= 0.0 {
                    weights.push(0.0);
                    comps.push(gmm.components[j].clone());
                    continue;
                }
                let mut mean = vec![0.0; d];
                for (x, r) in data.iter().zip(&resp) {
                    for (m, xi) in mean.iter_mut().zip(x) {
                        *m += r[j] * xi;
                    }
                }
                mean.iter_mut().for_each(|m| *m /= nj);
                let mut v = vec![0.0; d];
                for (x, r) in data.iter().zip(&resp) {
                    for ((vi, xi), m) in v.iter_mut().zip(x).zip(&mean) {
                        *vi += r[j] * (xi - m) * (xi - m);
                    }
                }
                v.iter_mut().for_each(|vi| *vi = (*vi / nj).max(cfg.var_floor));
                weights.push(nj / data.len() as f64);
                comps.push(DiagGaussian { mean, var: v });
            }
            let z: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= z);
            gmm = Gmm::new(weights, comps)?;
        }
        Ok((gmm, history))
    }
}
