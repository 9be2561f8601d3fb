//! Mixture density network over the target's next-step acceleration.
//!
//! A tanh multilayer perceptron maps the normalized joint state to the
//! logits, means and log standard deviations of a 1-D Gaussian mixture.
//! Gradients are computed by hand-written reverse mode over a flat parameter
//! vector laid out layer by layer as `W` (row-major, out x in) then `b`.

use std::ops::Range;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use reactbench_core::protogen::PrototypeSet;
use reactbench_core::{PredictionDistribution, SceneSample, Trajectory};

use crate::error::{PredictorError, Result};
use crate::math::{log_sum_exp, LN_2PI};
use crate::Predictor;

pub const SIGMA_FLOOR: f64 = 1e-4;
pub const STATE_DIM: usize = 6;

/// One training or scoring example: joint state and the realized action.
pub type StateAction = (Vec<f64>, f64);

#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub sigmas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdnModel {
    layer_sizes: Vec<usize>,
    n_mix: usize,
    params: Vec<f64>,
    input_mean: Vec<f64>,
    input_std: Vec<f64>,
}

fn n_params(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
}

impl MdnModel {
    /// Randomly initialized network; `hidden` lists the hidden layer widths.
    pub fn new(input_dim: usize, hidden: &[usize], n_mix: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 || n_mix == 0 || hidden.contains(&0) {
            return Err(PredictorError::InvalidModel("layer sizes and mixture count must be positive".into()));
        }
        let mut layer_sizes = vec![input_dim];
        layer_sizes.extend_from_slice(hidden);
        layer_sizes.push(3 * n_mix);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(n_params(&layer_sizes));
        for w in layer_sizes.windows(2) {
            let bound = (6.0 / (w[0] + w[1]) as f64).sqrt();
            params.extend((0..w[0] * w[1]).map(|_| rng.gen_range(-bound..bound)));
            params.extend(std::iter::repeat_n(0.0, w[1]));
        }
        Ok(Self { layer_sizes, n_mix, params, input_mean: vec![0.0; input_dim], input_std: vec![1.0; input_dim] })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn n_mix(&self) -> usize {
        self.n_mix
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn set_params(&mut self, params: Vec<f64>) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(PredictorError::DimensionMismatch { expected: self.params.len(), got: params.len() });
        }
        self.params = params;
        Ok(())
    }

    /// Sets the affine input normalization `(x - mean) / std`.
    pub fn set_normalization(&mut self, mean: Vec<f64>, std: Vec<f64>) -> Result<()> {
        let d = self.input_dim();
        if mean.len() != d || std.len() != d {
            return Err(PredictorError::DimensionMismatch { expected: d, got: mean.len().min(std.len()) });
        }
        if std.iter().any(|&s| !(s > 0.0)) {
            return Err(PredictorError::InvalidModel("normalization scale must be positive".into()));
        }
        self.input_mean = mean;
        self.input_std = std;
        Ok(())
    }

    fn layer_offset(&self, l: usize) -> usize {
        n_params(&self.layer_sizes[..=l])
    }

    /// Parameter index ranges `(weights, biases)` of layer `l`.
    pub fn layer_ranges(&self, l: usize) -> (Range<usize>, Range<usize>) {
        let off = self.layer_offset(l);
        let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
        (off..off + n_in * n_out, off + n_in * n_out..off + n_in * n_out + n_out)
    }

    pub fn n_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    /// Activations of every layer, input first, raw head output last.
    fn activations(&self, state: &[f64]) -> Result<Vec<Vec<f64>>> {
        if state.len() != self.input_dim() {
            return Err(PredictorError::DimensionMismatch { expected: self.input_dim(), got: state.len() });
        }
        let z: Vec<f64> = state.iter().zip(&self.input_mean).zip(&self.input_std).map(|((x, m), s)| (x - m) / s).collect();
        let mut acts = vec![z];
        for l in 0..self.n_layers() {
            let (wr, br) = self.layer_ranges(l);
            let (w, b) = (&self.params[wr], &self.params[br]);
            let input = acts.last().unwrap();
            let n_in = input.len();
            let last = l + 1 == self.n_layers();
            let out = b
                .iter()
                .enumerate()
                .map(|(o, bo)| {
                    let pre = bo + w[o * n_in..(o + 1) * n_in].iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
                    if last { pre } else { pre.tanh() }
                })
                .collect();
            acts.push(out);
        }
        Ok(acts)
    }

    fn head(&self, out: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<bool>) {
        let n = self.n_mix;
        let logits = &out[..n];
        let z = log_sum_exp(logits);
        let log_w = logits.iter().map(|l| l - z).collect();
        let means = out[n..2 * n].to_vec();
        let raw: Vec<f64> = out[2 * n..].iter().map(|ls| ls.exp()).collect();
        let floored = raw.iter().map(|&s| s < SIGMA_FLOOR).collect();
        let sigmas = raw.iter().map(|&s| s.max(SIGMA_FLOOR)).collect();
        (log_w, means, sigmas, floored)
    }

    pub fn mixture(&self, state: &[f64]) -> Result<Mixture> {
        let acts = self.activations(state)?;
        let (log_w, means, sigmas, _) = self.head(acts.last().unwrap());
        Ok(Mixture { weights: log_w.iter().map(|l| l.exp()).collect(), means, sigmas })
    }

    pub fn log_density(&self, state: &[f64], action: f64) -> Result<f64> {
        let acts = self.activations(state)?;
        let (log_w, means, sigmas, _) = self.head(acts.last().unwrap());
        Ok(component_log_terms(&log_w, &means, &sigmas, action).1)
    }

    /// Summed negative log-likelihood.
    pub fn nll(&self, data: &[StateAction]) -> Result<f64> {
        if data.is_empty() {
            return Err(PredictorError::EmptyData("empty state-action set".into()));
        }
        data.iter().map(|(s, a)| self.log_density(s, *a).map(|l| -l)).sum()
    }

    /// Summed negative log-likelihood and its gradient with respect to the
    /// flat parameter vector.
    pub fn nll_and_grad(&self, data: &[StateAction]) -> Result<(f64, Vec<f64>)> {
        if data.is_empty() {
            return Err(PredictorError::EmptyData("empty state-action set".into()));
        }
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        for (s, a) in data {
            loss += self.accumulate(s, *a, &mut grad)?;
        }
        Ok((loss, grad))
    }

    fn accumulate(&self, state: &[f64], action: f64, grad: &mut [f64]) -> Result<f64> {
        let n = self.n_mix;
        let acts = self.activations(state)?;
        let (log_w, means, sigmas, floored) = self.head(acts.last().unwrap());
        let (terms, log_p) = component_log_terms(&log_w, &means, &sigmas, action);

        let mut delta = vec![0.0; 3 * n];
        for k in 0..n {
            let r = (terms[k] - log_p).exp();
            let u = (action - means[k]) / sigmas[k];
            delta[k] = log_w[k].exp() - r;
            delta[n + k] = -r * u / sigmas[k];
            delta[2 * n + k] = if floored[k] { 0.0 } else { -r * (u * u - 1.0) };
        }

        for l in (0..self.n_layers()).rev() {
            let (wr, br) = self.layer_ranges(l);
            let input = &acts[l];
            let n_in = input.len();
            for (o, d) in delta.iter().enumerate() {
                grad[br.start + o] += d;
                let row = &mut grad[wr.start + o * n_in..wr.start + (o + 1) * n_in];
                for (g, x) in row.iter_mut().zip(input) {
                    *g += d * x;
                }
            }
            if l > 0 {
                let w = &self.params[wr];
                delta = (0..n_in)
                    .map(|i| {
                        let back: f64 = delta.iter().enumerate().map(|(o, d)| w[o * n_in + i] * d).sum();
                        back * (1.0 - input[i] * input[i])
                    })
                    .collect();
            }
        }
        Ok(-log_p)
    }
}

/// Per-component `log w_k + log N(a; mu_k, sigma_k)` and their log-sum.
fn component_log_terms(log_w: &[f64], means: &[f64], sigmas: &[f64], a: f64) -> (Vec<f64>, f64) {
    let terms: Vec<f64> = log_w
        .iter()
        .zip(means)
        .zip(sigmas)
        .map(|((lw, m), s)| {
            let u = (a - m) / s;
            lw - 0.5 * LN_2PI - s.ln() - 0.5 * u * u
        })
        .collect();
    let lp = log_sum_exp(&terms);
    (terms, lp)
}

/// State-action pairs along a joint rollout of host and target.
///
/// State: bumper gap from the target's front to the host's rear, target
/// speed, host speed, the target's acceleration over the previous step,
/// lateral offset and the host's distance to the ramp end. Action: the
/// target's acceleration over the next step.
pub fn state_action_pairs(host: &Trajectory, target: &Trajectory, prev_target_v: f64, ramp_end_x: f64) -> Vec<StateAction> {
    let dt = target.dt();
    let n = host.len().min(target.len());
    let (hp, tp) = (host.points(), target.points());
    (0..n - 1)
        .map(|k| {
            let v_prev = if k == 0 { prev_target_v } else { tp[k - 1].v };
            let state = vec![
                host.rear(k) - target.front(k),
                tp[k].v,
                hp[k].v,
                (tp[k].v - v_prev) / dt,
                hp[k].y - tp[k].y,
                ramp_end_x - host.front(k),
            ];
            (state, (tp[k + 1].v - tp[k].v) / dt)
        })
        .collect()
}

fn previous_target_speed(sample: &SceneSample) -> f64 {
    let pts = sample.target_history().points();
    pts[pts.len().saturating_sub(2)].v
}

/// Training pairs from the ground-truth futures of `samples`.
pub fn training_pairs(samples: &[SceneSample]) -> Vec<StateAction> {
    samples
        .iter()
        .flat_map(|s| state_action_pairs(&s.future_host, &s.future_predicted, previous_target_speed(s), s.context.ramp_end_x))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MdnTrainConfig {
    pub hidden: Vec<usize>,
    pub n_mix: usize,
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
}

impl Default for MdnTrainConfig {
    fn default() -> Self {
        Self { hidden: vec![16, 16], n_mix: 3, lr: 0.01, epochs: 30, batch: 64, seed: 0 }
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (pos - i as f64) * (sorted[j] - sorted[i])
}

/// Mini-batch SGD on the mean batch NLL. Returns the model with the lowest
/// full-data NLL seen at epoch boundaries (the initial model included) and
/// the per-epoch mean NLL trace.
pub fn train_mdn(data: &[StateAction], cfg: &MdnTrainConfig) -> Result<(MdnModel, Vec<f64>)> {
    if data.is_empty() || data.len() < cfg.batch || cfg.batch == 0 {
        return Err(PredictorError::EmptyData(format!("{} pairs for batch size {}", data.len(), cfg.batch)));
    }
    let d = data[0].0.len();
    let mut model = MdnModel::new(d, &cfg.hidden, cfg.n_mix, cfg.seed)?;

    let n = data.len() as f64;
    let mean: Vec<f64> = (0..d).map(|i| data.iter().map(|(s, _)| s[i]).sum::<f64>() / n).collect();
    let std: Vec<f64> = (0..d)
        .map(|i| {
            let v = data.iter().map(|(s, _)| (s[i] - mean[i]).powi(2)).sum::<f64>() / n;
            if v.sqrt() > 1e-9 { v.sqrt() } else { 1.0 }
        })
        .collect();
    model.set_normalization(mean, std)?;

    let mut actions: Vec<f64> = data.iter().map(|(_, a)| *a).collect();
    actions.sort_by(f64::total_cmp);
    let a_mean = actions.iter().sum::<f64>() / n;
    let a_std = (actions.iter().map(|a| (a - a_mean).powi(2)).sum::<f64>() / n).sqrt().max(1e-2);
    let last = model.n_layers() - 1;
    let (wr, br) = model.layer_ranges(last);
    let k = cfg.n_mix;
    let mut params = model.params().to_vec();
    params[wr].iter_mut().for_each(|w| *w *= 0.1);
    for j in 0..k {
        params[br.start + j] = 0.0;
        params[br.start + k + j] = quantile(&actions, (j as f64 + 0.5) / k as f64);
        params[br.start + 2 * k + j] = a_std.ln();
    }
    model.set_params(params)?;

    let mut best_loss = model.nll(data)? / n;
    let mut best = model.clone();
    let mut trace = vec![best_loss];
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let mut batch = Vec::with_capacity(cfg.batch);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| data[i].clone()));
            let (loss, grad) = model.nll_and_grad(&batch)?;
            if !loss.is_finite() {
                return Err(PredictorError::Divergence { iteration: epoch, value: loss });
            }
            let scale = cfg.lr / batch.len() as f64;
            let params: Vec<f64> = model.params().iter().zip(&grad).map(|(p, g)| p - scale * g).collect();
            model.set_params(params)?;
        }
        let loss = model.nll(data)? / n;
        if !loss.is_finite() {
            return Err(PredictorError::Divergence { iteration: epoch, value: loss });
        }
        trace.push(loss);
        if loss < best_loss {
            best_loss = loss;
            best = model.clone();
        }
    }
    Ok((best, trace))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdnPredictor {
    pub config: MdnTrainConfig,
    pub model: MdnModel,
}

impl MdnPredictor {
    pub fn fit(samples: &[SceneSample], config: MdnTrainConfig) -> Result<(Self, Vec<f64>)> {
        let (model, trace) = train_mdn(&training_pairs(samples), &config)?;
        Ok((Self { config, model }, trace))
    }

    /// Horizon log-likelihood of each prototype under the model.
    pub fn log_likelihoods(&self, sample: &SceneSample, protos: &PrototypeSet) -> Result<Vec<f64>> {
        let prev = previous_target_speed(sample);
        protos
            .trajectories()
            .iter()
            .map(|proto| {
                state_action_pairs(&sample.future_host, proto, prev, sample.context.ramp_end_x)
                    .iter()
                    .map(|(s, a)| self.model.log_density(s, *a))
                    .sum()
            })
            .collect()
    }
}

impl Predictor for MdnPredictor {
    fn predict(&self, sample: &SceneSample, protos: &PrototypeSet) -> Result<PredictionDistribution> {
        let ll = self.log_likelihoods(sample, protos)?;
        if ll.iter().any(|l| l.is_nan()) || !ll.iter().any(|l| l.is_finite()) {
            return Err(PredictorError::NumericalUnderflow(sample.sample_id));
        }
        Ok(PredictionDistribution::from_log_weights(&ll)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_head(mut m: MdnModel) -> MdnModel {
        let (wr, br) = m.layer_ranges(m.n_layers() - 1);
        let mut p = m.params().to_vec();
        p[wr.start..br.end].iter_mut().for_each(|x| *x = 0.0);
        m.set_params(p).unwrap();
        m
    }

    #[test]
    fn zero_output_layer_gives_standard_components() {
        let m = zero_head(MdnModel::new(6, &[16, 16], 3, 4).unwrap());
        let mix = m.mixture(&[1.0, -2.0, 0.5, 3.0, 0.0, 7.0]).unwrap();
        assert!(mix.weights.iter().all(|w| (w - 1.0 / 3.0).abs() < 1e-15));
        assert!(mix.means.iter().all(|&mu| mu == 0.0));
        assert!(mix.sigmas.iter().all(|&s| s == 1.0));
    }

    #[test]
    fn single_component_weight_is_one() {
        let m = MdnModel::new(3, &[4], 1, 9).unwrap();
        for x in [[0.0, 0.0, 0.0], [5.0, -3.0, 1.0]] {
            assert_eq!(m.mixture(&x).unwrap().weights, vec![1.0]);
        }
    }

    #[test]
    fn standard_normal_nll_at_mean() {
        let m = zero_head(MdnModel::new(2, &[3], 1, 1).unwrap());
        let data: Vec<StateAction> = vec![(vec![0.3, 0.1], 0.0), (vec![-1.0, 2.0], 0.0)];
        assert!((m.nll(&data).unwrap() - 2.0 * 0.5 * LN_2PI).abs() < 1e-12);
    }

    #[test]
    fn duplicated_data_doubles_loss_and_gradient() {
        let m = MdnModel::new(2, &[3], 2, 5).unwrap();
        let data: Vec<StateAction> = vec![(vec![0.3, 0.1], 0.4), (vec![-1.0, 2.0], -0.7)];
        let doubled: Vec<StateAction> = data.iter().chain(&data).cloned().collect();
        let (l1, g1) = m.nll_and_grad(&data).unwrap();
        let (l2, g2) = m.nll_and_grad(&doubled).unwrap();
        assert_eq!(l2, 2.0 * l1);
        for (a, b) in g1.iter().zip(&g2) {
            assert!((b - 2.0 * a).abs() <= 1e-14 * a.abs().max(1.0));
        }
    }

    #[test]
    fn errors() {
        let m = MdnModel::new(2, &[3], 2, 5).unwrap();
        assert!(matches!(m.nll(&[]), Err(PredictorError::EmptyData(_))));
        assert!(matches!(m.mixture(&[1.0]), Err(PredictorError::DimensionMismatch { .. })));
    }
}
