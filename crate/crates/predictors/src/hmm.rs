//! Hidden Markov model with diagonal Gaussian emissions, evaluated and
//! trained entirely in log space.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PredictorError, Result};
use crate::math::{log_sum_exp, moments, quantile_means, DiagGaussian};

pub const VAR_FLOOR: f64 = 1e-6;
const STOCHASTIC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianHmm {
    initial: Vec<f64>,
    transition: Vec<Vec<f64>>,
    emissions: Vec<DiagGaussian>,
}

fn check_simplex(p: &[f64], what: &str) -> Result<()> {
    let sum: f64 = p.iter().sum();
    if p.iter().any(|&x| !(x >= 0.0)) || (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(PredictorError::InvalidModel(format!("{what} is not a probability vector")));
    }
    Ok(())
}

impl GaussianHmm {
    pub fn new(initial: Vec<f64>, transition: Vec<Vec<f64>>, emissions: Vec<DiagGaussian>) -> Result<Self> {
        let h = initial.len();
        if h == 0 || transition.len() != h || emissions.len() != h {
            return Err(PredictorError::InvalidModel(format!("inconsistent state count {h}")));
        }
        check_simplex(&initial, "initial distribution")?;
        for row in &transition {
            if row.len() != h {
                return Err(PredictorError::DimensionMismatch { expected: h, got: row.len() });
            }
            check_simplex(row, "transition row")?;
        }
        let d = emissions[0].dim();
        for e in &emissions {
            if e.dim() != d || e.var.len() != d {
                return Err(PredictorError::DimensionMismatch { expected: d, got: e.dim() });
            }
            if e.var.iter().any(|&v| !(v >= VAR_FLOOR)) {
                return Err(PredictorError::InvalidModel("emission variance below floor".into()));
            }
        }
        Ok(Self { initial, transition, emissions })
    }

    pub fn n_states(&self) -> usize {
        self.initial.len()
    }

    pub fn dim(&self) -> usize {
        self.emissions[0].dim()
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn emissions(&self) -> &[DiagGaussian] {
        &self.emissions
    }

    fn log_emissions(&self, obs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        obs.iter()
            .map(|o| self.emissions.iter().map(|e| e.log_pdf(o)).collect())
            .collect()
    }

    fn log_alpha(&self, log_b: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let h = self.n_states();
        let log_a: Vec<Vec<f64>> = self.transition.iter().map(|r| r.iter().map(|p| p.ln()).collect()).collect();
        let mut alpha = Vec::with_capacity(log_b.len());
        alpha.push((0..h).map(|i| self.initial[i].ln() + log_b[0][i]).collect::<Vec<_>>());
        let mut terms = vec![0.0; h];
        for b in &log_b[1..] {
            let prev = alpha.last().unwrap();
            let next = (0..h)
                .map(|j| {
                    for i in 0..h {
                        terms[i] = prev[i] + log_a[i][j];
                    }
                    log_sum_exp(&terms) + b[j]
                })
                .collect();
            alpha.push(next);
        }
        alpha
    }

    /// Exact `log P(obs | model)` by the forward recursion.
    pub fn forward_loglik(&self, obs: &[Vec<f64>]) -> Result<f64> {
        if obs.is_empty() {
            return Err(PredictorError::EmptyData("empty observation sequence".into()));
        }
        let log_b = self.log_emissions(obs)?;
        Ok(log_sum_exp(self.log_alpha(&log_b).last().unwrap()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaumWelchConfig {
    pub max_iter: usize,
    /// Stop once the total log-likelihood improves by less than this.
    pub tol: f64,
    pub seed: u64,
    pub var_floor: f64,
}

impl Default for BaumWelchConfig {
    fn default() -> Self {
        Self { max_iter: 100, tol: 1e-6, seed: 0, var_floor: VAR_FLOOR }
    }
}

/// Expected sufficient statistics accumulated over all sequences.
struct Stats {
    loglik: f64,
    init: Vec<f64>,
    trans: Vec<Vec<f64>>,
    occupancy: Vec<f64>,
    trans_from: Vec<f64>,
    /// Per-state sums of observations, then state means.
    sum: Vec<Vec<f64>>,
    sum_sq: Vec<Vec<f64>>,
}

impl GaussianHmm {
    /// State posteriors per frame and the expected transition counts of one sequence.
    fn posteriors(&self, obs: &[Vec<f64>], trans: &mut [Vec<f64>]) -> Result<(f64, Vec<Vec<f64>>)> {
        let h = self.n_states();
        let log_a: Vec<Vec<f64>> = self.transition.iter().map(|r| r.iter().map(|p| p.ln()).collect()).collect();
        let log_b = self.log_emissions(obs)?;
        let alpha = self.log_alpha(&log_b);
        let t_len = obs.len();
        let ll = log_sum_exp(&alpha[t_len - 1]);

        let mut beta = vec![vec![0.0; h]; t_len];
        let mut terms = vec![0.0; h];
        for t in (0..t_len - 1).rev() {
            for i in 0..h {
                for j in 0..h {
                    terms[j] = log_a[i][j] + log_b[t + 1][j] + beta[t + 1][j];
                }
                beta[t][i] = log_sum_exp(&terms);
            }
        }
        for t in 0..t_len - 1 {
            for i in 0..h {
                for j in 0..h {
                    trans[i][j] += (alpha[t][i] + log_a[i][j] + log_b[t + 1][j] + beta[t + 1][j] - ll).exp();
                }
            }
        }
        let gamma = (0..t_len)
            .map(|t| (0..h).map(|i| (alpha[t][i] + beta[t][i] - ll).exp()).collect())
            .collect();
        Ok((ll, gamma))
    }

    fn expectations(&self, seqs: &[Vec<Vec<f64>>]) -> Result<Stats> {
        let h = self.n_states();
        let d = self.dim();
        let mut st = Stats {
            loglik: 0.0,
            init: vec![0.0; h],
            trans: vec![vec![0.0; h]; h],
            occupancy: vec![0.0; h],
            trans_from: vec![0.0; h],
            sum: vec![vec![0.0; d]; h],
            sum_sq: vec![vec![0.0; d]; h],
        };
        let mut gammas = Vec::with_capacity(seqs.len());
        for obs in seqs {
            let (ll, gamma) = self.posteriors(obs, &mut st.trans)?;
            st.loglik += ll;
            for (t, g) in gamma.iter().enumerate() {
                for i in 0..h {
                    if t == 0 {
                        st.init[i] += g[i];
                    }
                    if t + 1 < obs.len() {
                        st.trans_from[i] += g[i];
                    }
                    st.occupancy[i] += g[i];
                    for k in 0..d {
                        st.sum[i][k] += g[i] * obs[t][k];
                    }
                }
            }
            gammas.push(gamma);
        }
        for i in 0..h {
            if st.occupancy[i] > 0.0 {
                st.sum[i].iter_mut().for_each(|s| *s /= st.occupancy[i]);
            } else {
                st.sum[i] = self.emissions[i].mean.clone();
            }
        }
        for (obs, gamma) in seqs.iter().zip(&gammas) {
            for (o, g) in obs.iter().zip(gamma) {
                for i in 0..h {
                    for k in 0..d {
                        let c = o[k] - st.sum[i][k];
                        st.sum_sq[i][k] += g[i] * c * c;
                    }
                }
            }
        }
        Ok(st)
    }

    fn maximize(&self, st: &Stats, n_seqs: usize, var_floor: f64) -> Result<Self> {
        let h = self.n_states();
        let initial: Vec<f64> = st.init.iter().map(|g| g / n_seqs as f64).collect();
        let z: f64 = initial.iter().sum();
        let initial = initial.iter().map(|p| p / z).collect();
        let transition = (0..h)
            .map(|i| {
                if st.trans_from[i] > 0.0 {
                    let row: Vec<f64> = st.trans[i].iter().map(|x| x / st.trans_from[i]).collect();
                    let z: f64 = row.iter().sum();
                    row.into_iter().map(|p| p / z).collect()
                } else {
                    self.transition[i].clone()
                }
            })
            .collect();
        let emissions = (0..h)
            .map(|i| {
                if st.occupancy[i] > 0.0 {
                    DiagGaussian {
                        mean: st.sum[i].clone(),
                        var: st.sum_sq[i].iter().map(|s| (s / st.occupancy[i]).max(var_floor)).collect(),
                    }
                } else {
                    self.emissions[i].clone()
                }
            })
            .collect();
        GaussianHmm::new(initial, transition, emissions)
    }
}

/// Deterministic starting model: state means from quantile chunks of the
/// first feature plus a small seeded jitter, pooled variances, sticky
/// transitions.
fn initial_model(seqs: &[Vec<Vec<f64>>], h: usize, cfg: &BaumWelchConfig) -> Result<GaussianHmm> {
    let frames: Vec<&[f64]> = seqs.iter().flatten().map(|v| v.as_slice()).collect();
    let d = frames[0].len();
    if let Some(bad) = frames.iter().find(|f| f.len() != d) {
        return Err(PredictorError::DimensionMismatch { expected: d, got: bad.len() });
    }
    let (_, var) = moments(&frames, d);
    let var: Vec<f64> = var.iter().map(|v| v.max(cfg.var_floor)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let emissions = quantile_means(&frames, h, d)
        .into_iter()
        .map(|mean| DiagGaussian {
            mean: mean.iter().zip(&var).map(|(m, v)| m + 0.01 * v.sqrt() * rng.gen_range(-1.0..1.0)).collect(),
            var: var.clone(),
        })
        .collect();
    let stay = if h == 1 { 1.0 } else { 0.9 };
    let transition = (0..h)
        .map(|i| (0..h).map(|j| if i == j { stay } else { (1.0 - stay) / (h - 1) as f64 }).collect())
        .collect();
    GaussianHmm::new(vec![1.0 / h as f64; h], transition, emissions)
}

/// Fits an `h`-state HMM by expectation maximization. Returns the model and
/// the total training log-likelihood before every update and after the last.
pub fn baum_welch(seqs: &[Vec<Vec<f64>>], h: usize, cfg: &BaumWelchConfig) -> Result<(GaussianHmm, Vec<f64>)> {
    if seqs.is_empty() || seqs.iter().any(|s| s.is_empty()) {
        return Err(PredictorError::EmptyData("Baum-Welch needs non-empty sequences".into()));
    }
    if h == 0 {
        return Err(PredictorError::InvalidModel("need at least one hidden state".into()));
    }
    let mut model = initial_model(seqs, h, cfg)?;
    let mut history = Vec::new();
    for iteration in 0..cfg.max_iter {
        let stats = model.expectations(seqs)?;
        if !stats.loglik.is_finite() {
            return Err(PredictorError::Divergence { iteration, value: stats.loglik });
        }
        if let Some(&prev) = history.last() {
            if stats.loglik - prev < cfg.tol {
                history.push(stats.loglik);
                return Ok((model, history));
            }
        }
        history.push(stats.loglik);
        model = model.maximize(&stats, seqs.len(), cfg.var_floor)?;
    }
    let final_ll = seqs.iter().map(|s| model.forward_loglik(s)).sum::<Result<f64>>()?;
    history.push(final_ll);
    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::LN_2PI;

    fn single(mean: f64, var: f64) -> GaussianHmm {
        GaussianHmm::new(vec![1.0], vec![vec![1.0]], vec![DiagGaussian { mean: vec![mean], var: vec![var] }]).unwrap()
    }

    #[test]
    fn single_state_is_iid_gaussian() {
        let hmm = single(1.0, 2.0);
        let obs: Vec<Vec<f64>> = [0.5, 1.0, 3.0].iter().map(|&x| vec![x]).collect();
        let expected: f64 = obs.iter().map(|o| -0.5 * (LN_2PI + 2f64.ln() + (o[0] - 1.0).powi(2) / 2.0)).sum();
        assert!((hmm.forward_loglik(&obs).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn indistinguishable_states_match_single_state() {
        let e = DiagGaussian { mean: vec![1.0], var: vec![2.0] };
        let two = GaussianHmm::new(vec![0.3, 0.7], vec![vec![0.6, 0.4], vec![0.1, 0.9]], vec![e.clone(), e]).unwrap();
        let obs: Vec<Vec<f64>> = [0.5, 1.0, 3.0, -2.0].iter().map(|&x| vec![x]).collect();
        let a = two.forward_loglik(&obs).unwrap();
        let b = single(1.0, 2.0).forward_loglik(&obs).unwrap();
        assert!((a - b).abs() < 1e-12 * b.abs());
    }

    #[test]
    fn rejects_bad_models() {
        let e = DiagGaussian { mean: vec![0.0], var: vec![1.0] };
        assert!(GaussianHmm::new(vec![0.5, 0.6], vec![vec![1.0, 0.0]; 2], vec![e.clone(), e.clone()]).is_err());
        assert!(GaussianHmm::new(vec![1.0], vec![vec![1.0]], vec![DiagGaussian { mean: vec![0.0], var: vec![1e-9] }]).is_err());
        assert!(single(0.0, 1.0).forward_loglik(&[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn constant_data_hits_variance_floor() {
        let seqs = vec![vec![vec![2.5, -1.0]; 12]; 3];
        let (hmm, history) = baum_welch(&seqs, 2, &BaumWelchConfig::default()).unwrap();
        assert!(history.iter().all(|l| l.is_finite()));
        for e in hmm.emissions() {
            assert!(e.var.iter().all(|&v| v == VAR_FLOOR));
        }
    }

    #[test]
    fn empty_data_is_an_error() {
        assert!(matches!(baum_welch(&[], 2, &BaumWelchConfig::default()), Err(PredictorError::EmptyData(_))));
    }
}
