use serde::{Deserialize, Serialize};

use crate::error::{PredictorError, Result};

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `log Σ exp(x_i)`, `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return max;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// Gaussian with diagonal covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagGaussian {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl DiagGaussian {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn log_pdf(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(PredictorError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(self
            .mean
            .iter()
            .zip(&self.var)
            .zip(x)
            .map(|((m, v), xi)| -0.5 * (LN_2PI + v.ln() + (xi - m) * (xi - m) / v))
            .sum())
    }
}

/// Per-dimension mean and variance of a set of vectors.
pub(crate) fn moments(data: &[&[f64]], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let n = data.len().max(1) as f64;
    let mut mean = vec![0.0; dim];
    for x in data {
        for (m, xi) in mean.iter_mut().zip(x.iter()) {
            *m += xi / n;
        }
    }
    let mut var = vec![0.0; dim];
    for x in data {
        for ((v, m), xi) in var.iter_mut().zip(&mean).zip(x.iter()) {
            *v += (xi - m) * (xi - m) / n;
        }
    }
    (mean, var)
}

/// Splits data sorted by its first feature into `k` contiguous chunks and
/// returns their means, a deterministic starting point for EM.
pub(crate) fn quantile_means(data: &[&[f64]], k: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut sorted: Vec<&[f64]> = data.to_vec();
    sorted.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let n = sorted.len();
    (0..k)
        .map(|c| {
            let lo = c * n / k;
            let hi = ((c + 1) * n / k).max(lo + 1).min(n);
            moments(&sorted[lo.min(n - 1)..hi], dim).0
        })
        .collect()
}
