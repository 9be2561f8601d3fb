//! Brier score and its fatality-aware decomposition.
//!
//! For each sample the non-ground-truth patterns are split by criticality
//! relative to the ground truth. Probability mass on more critical patterns
//! counts as conservatism (false alarms), mass on less critical ones as
//! non-defensiveness (missed threats). Both are weighted by the normalized
//! criticality deviation `|cr_j - cr_gt| / S_k` and averaged over samples.
//! All sums run in sample order so results are reproducible bit for bit.

use serde::{Deserialize, Serialize};

use crate::criticality::CriticalityProfile;
use crate::error::{CoreError, Result};
use crate::types::{PatternId, PredictionDistribution};

/// Samples whose total criticality deviation is below this contribute
/// nothing to conservatism and non-defensiveness.
pub const DEGENERATE_WEIGHT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub sample_id: u64,
    pub gt_pattern: PatternId,
    pub prediction: PredictionDistribution,
    pub criticality: CriticalityProfile,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationSet {
    records: Vec<EvalRecord>,
    m: usize,
    horizon: f64,
}

impl EvaluationSet {
    pub fn new(records: Vec<EvalRecord>, horizon: f64) -> Result<Self> {
        let first = records
            .first()
            .ok_or_else(|| CoreError::InvalidEvaluationSet("no samples".into()))?;
        let m = first.prediction.m();
        for r in &records {
            if r.prediction.m() != m || r.criticality.cr.len() != m {
                return Err(CoreError::InvalidEvaluationSet(format!(
                    "sample {} does not have {m} patterns",
                    r.sample_id
                )));
            }
            if r.gt_pattern.0 == 0 || r.gt_pattern.0 > m {
                return Err(CoreError::PatternOutOfRange { pattern: r.gt_pattern.0, m });
            }
        }
        Ok(Self { records, m, horizon })
    }

    pub fn records(&self) -> &[EvalRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    fn brier_denominator(&self) -> f64 {
        (self.records.len() * self.m) as f64
    }
}

/// The five scores of one predictor on one evaluation set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "G")]
    pub g: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "B_c")]
    pub b_c: f64,
}

impl MetricReport {
    pub const CSV_HEADER: &'static str = "method,B,G,C,D,B_c";

    pub fn csv_row(&self, method: &str) -> String {
        format!("{method},{:.6},{:.6},{:.6},{:.6},{:.6}", self.b, self.g, self.c, self.d, self.b_c)
    }

    /// `|B_c - (G + C + D)|`.
    pub fn identity_residual(&self) -> f64 {
        (self.b_c - (self.g + self.c + self.d)).abs()
    }
}

/// Baseline Brier score over all samples and patterns.
pub fn brier(eval: &EvaluationSet) -> f64 {
    let mut total = 0.0;
    for r in &eval.records {
        for (j, &p) in r.prediction.probs().iter().enumerate() {
            let o = if j == r.gt_pattern.index() { 1.0 } else { 0.0 };
            total += (p - o) * (p - o);
        }
    }
    total / eval.brier_denominator()
}

/// Error on the ground-truth pattern, with the Brier weighting.
pub fn ground_truth_term(eval: &EvaluationSet) -> f64 {
    let mut total = 0.0;
    for r in &eval.records {
        let pg = r.prediction.get(r.gt_pattern);
        total += (pg - 1.0) * (pg - 1.0);
    }
    total / eval.brier_denominator()
}

fn total_deviation(r: &EvalRecord) -> f64 {
    let g = r.gt_pattern.index();
    r.criticality
        .cr
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != g)
        .map(|(_, &c)| (c - r.criticality.cr_gt).abs())
        .sum()
}

/// Sum over samples of weighted squared probabilities on patterns selected by
/// `side(cr_j - cr_gt)`.
fn weighted_side(eval: &EvaluationSet, side: impl Fn(f64) -> bool) -> f64 {
    let mut total = 0.0;
    for r in &eval.records {
        let s = total_deviation(r);
        if s < DEGENERATE_WEIGHT {
            continue;
        }
        let mut acc = 0.0;
        for (j, &c) in r.criticality.cr.iter().enumerate() {
            let dev = c - r.criticality.cr_gt;
            if side(dev) {
                let p = r.prediction.probs()[j];
                acc += dev.abs() / s * p * p;
            }
        }
        total += acc;
    }
    total / eval.len() as f64
}

/// Weighted mass on patterns more critical than the ground truth.
pub fn conservatism(eval: &EvaluationSet) -> f64 {
    weighted_side(eval, |dev| dev > 0.0)
}

/// Weighted mass on patterns less critical than the ground truth.
pub fn non_defensiveness(eval: &EvaluationSet) -> f64 {
    weighted_side(eval, |dev| dev < 0.0)
}

/// All five scores; `B_c` is assembled from its parts.
pub fn fatality_aware(eval: &EvaluationSet) -> MetricReport {
    let b = brier(eval);
    let g = ground_truth_term(eval);
    let c = conservatism(eval);
    let d = non_defensiveness(eval);
    MetricReport { b, g, c, d, b_c: d + g + c }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(probs: Vec<f64>, cr: Vec<f64>, gt: usize) -> EvalRecord {
        EvalRecord {
            sample_id: 0,
            gt_pattern: PatternId(gt),
            prediction: PredictionDistribution::new(probs).unwrap(),
            criticality: CriticalityProfile::from_values(cr, PatternId(gt)),
        }
    }

    fn set(records: Vec<EvalRecord>) -> EvaluationSet {
        EvaluationSet::new(records, 3.0).unwrap()
    }

    #[test]
    fn perfect_prediction_scores_zero() {
        let e = set(vec![record(vec![0.0, 1.0, 0.0, 0.0], vec![0.1, 0.3, 0.5, 0.9], 2)]);
        let r = fatality_aware(&e);
        assert_eq!(r, MetricReport { b: 0.0, g: 0.0, c: 0.0, d: 0.0, b_c: 0.0 });
    }

    #[test]
    fn uniform_and_worst_brier() {
        let e = set(vec![record(vec![0.25; 4], vec![0.0; 4], 1)]);
        assert_eq!(brier(&e), 0.1875);
        assert_eq!(ground_truth_term(&e), 0.140625);
        let e = set(vec![record(vec![0.0, 0.0, 1.0, 0.0], vec![0.0; 4], 1)]);
        assert_eq!(brier(&e), 0.5);
    }

    #[test]
    fn two_sample_ground_truth_term() {
        let e = set(vec![
            record(vec![0.4, 0.2, 0.2, 0.2], vec![0.0; 4], 1),
            record(vec![0.1, 0.8, 0.05, 0.05], vec![0.0; 4], 2),
        ]);
        assert!((ground_truth_term(&e) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn worked_decomposition() {
        let e = set(vec![record(vec![0.2, 0.4, 0.3, 0.1], vec![0.1, 0.3, 0.5, 0.9], 2)]);
        let r = fatality_aware(&e);
        assert!((r.c - 0.024).abs() < 1e-15);
        assert!((r.d - 0.008).abs() < 1e-15);
        assert!((r.g - 0.09).abs() < 1e-15);
        assert!((r.b_c - 0.122).abs() < 1e-15);
    }

    #[test]
    fn degenerate_weights_contribute_nothing() {
        let e = set(vec![record(vec![0.1, 0.2, 0.3, 0.4], vec![0.5; 4], 3)]);
        assert_eq!(conservatism(&e), 0.0);
        assert_eq!(non_defensiveness(&e), 0.0);
    }

    #[test]
    fn mass_below_ground_truth_is_not_conservative() {
        let e = set(vec![record(vec![0.5, 0.5, 0.0, 0.0], vec![0.1, 0.2, 0.5, 0.9], 2)]);
        assert_eq!(conservatism(&e), 0.0);
        let e = set(vec![record(vec![0.5, 0.5, 0.0, 0.0], vec![0.1, 0.2, 0.5, 0.9], 1)]);
        assert_eq!(non_defensiveness(&e), 0.0);
    }

    #[test]
    fn csv_row_format() {
        let r = MetricReport { b: 0.1875, g: 0.140625, c: 0.0, d: 0.0, b_c: 0.140625 };
        assert_eq!(r.csv_row("uniform"), "uniform,0.187500,0.140625,0.000000,0.000000,0.140625");
    }

    #[test]
    fn rejects_mismatched_pattern_counts() {
        let a = record(vec![0.5, 0.5], vec![0.0, 0.0], 1);
        let b = record(vec![0.25; 4], vec![0.0; 4], 1);
        assert!(EvaluationSet::new(vec![a, b], 3.0).is_err());
        assert!(EvaluationSet::new(vec![], 3.0).is_err());
    }

    fn random_record() -> impl Strategy<Value = EvalRecord> {
        (
            prop::collection::vec(0.0f64..1.0, 4),
            prop::collection::vec(0.0f64..10.0, 4),
            1usize..=4,
        )
            .prop_map(|(raw, cr, gt)| {
                let s: f64 = raw.iter().sum::<f64>() + 1e-3;
                let mut probs: Vec<f64> = raw.iter().map(|p| (p + 0.25e-3) / s).collect();
                let t: f64 = probs.iter().sum();
                probs.iter_mut().for_each(|p| *p /= t);
                record(probs, cr, gt)
            })
    }

    proptest! {
        #[test]
        fn identity_and_bounds(records in prop::collection::vec(random_record(), 1..20)) {
            let e = set(records);
            let r = fatality_aware(&e);
            prop_assert!(r.identity_residual() <= 1e-12);
            prop_assert!(r.b >= 0.0 && r.g >= 0.0 && r.c >= 0.0 && r.d >= 0.0);
            prop_assert!(r.g <= 1.0 / 4.0 + 1e-15);
            prop_assert!(r.c <= 1.0 && r.d <= 1.0);
            prop_assert!(r.b <= 2.0 / 4.0 + 1e-15);
        }

        #[test]
        fn permutation_invariance(rec in random_record(), perm_seed in 0usize..24) {
            let mut perm: Vec<usize> = (0..4).collect();
            let mut k = perm_seed;
            for i in (1..4).rev() {
                perm.swap(i, k % (i + 1));
                k /= i + 1;
            }
            let probs: Vec<f64> = perm.iter().map(|&j| rec.prediction.probs()[j]).collect();
            let cr: Vec<f64> = perm.iter().map(|&j| rec.criticality.cr[j]).collect();
            let gt = perm.iter().position(|&j| j == rec.gt_pattern.index()).unwrap() + 1;
            let a = fatality_aware(&set(vec![rec.clone()]));
            let b = fatality_aware(&set(vec![record(probs, cr, gt)]));
            prop_assert!((a.b - b.b).abs() < 1e-15);
            prop_assert!((a.g - b.g).abs() < 1e-15);
            prop_assert!((a.c - b.c).abs() < 1e-15);
            prop_assert!((a.d - b.d).abs() < 1e-15);
        }
    }
}
