//! Independent metric checker. Recomputes the test set from the dataset,
//! validates a predictions file against it and re-derives all five scores
//! by direct summation over criticality-sorted patterns.

use serde::{Deserialize, Serialize};

use reactbench_core::MetricReport;

use crate::error::{BenchError, Result};
use crate::eval::{MethodResult, Prepared};

/// Maximum tolerated deviation between evaluation and oracle scores.
pub const ORACLE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub method: String,
    pub recomputed: MetricReport,
    pub max_abs_deviation: f64,
}

/// Scores from first principles: sort patterns by criticality, split them
/// around the ground truth and weight by normalized criticality distance.
pub fn naive_scores(records: &[(usize, Vec<f64>, Vec<f64>)]) -> MetricReport {
    let n = records.len() as f64;
    let m = records.first().map_or(1, |r| r.1.len()) as f64;
    let (mut b, mut g, mut c, mut d) = (0.0, 0.0, 0.0, 0.0);
    for (gt, probs, cr) in records {
        let gi = gt - 1;
        for (j, p) in probs.iter().enumerate() {
            let target = if j == gi { 1.0 } else { 0.0 };
            b += (p - target).powi(2);
        }
        g += (probs[gi] - 1.0).powi(2);

        let mut order: Vec<usize> = (0..cr.len()).collect();
        order.sort_by(|&x, &y| cr[x].total_cmp(&cr[y]).then(x.cmp(&y)));
        let s: f64 = (0..cr.len()).filter(|&j| j != gi).map(|j| (cr[j] - cr[gi]).abs()).sum();
        if s < 1e-12 {
            continue;
        }
        for &j in &order {
            if j == gi {
                continue;
            }
            let w = (cr[j] - cr[gi]).abs() / s;
            if cr[j] > cr[gi] {
                c += w * probs[j] * probs[j];
            } else if cr[j] < cr[gi] {
                d += w * probs[j] * probs[j];
            }
        }
    }
    let (b, g, c, d) = (b / (n * m), g / (n * m), c / n, d / n);
    MetricReport { b, g, c, d, b_c: g + c + d }
}

fn validate(result: &MethodResult, prepared: &[Prepared]) -> Result<()> {
    if result.records.len() != prepared.len() {
        return Err(BenchError::Oracle(format!(
            "{}: {} predictions for {} test samples",
            result.method,
            result.records.len(),
            prepared.len()
        )));
    }
    for (r, p) in result.records.iter().zip(prepared) {
        let id = r.sample_id;
        let fail = |msg: String| Err(BenchError::Oracle(format!("{}: sample {id}: {msg}", result.method)));
        if id != p.sample.sample_id {
            return fail(format!("expected sample {}", p.sample.sample_id));
        }
        if r.gt_pattern != p.sample.gt_pattern.0 {
            return fail(format!("ground truth {} but dataset says {}", r.gt_pattern, p.sample.gt_pattern.0));
        }
        if r.probs.len() != p.protos.len() || r.cr.len() != p.protos.len() {
            return fail("pattern count mismatch".into());
        }
        if let Some(x) = r.probs.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return fail(format!("probability {x} outside [0, 1]"));
        }
        let sum: f64 = r.probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return fail(format!("probabilities sum to {sum}"));
        }
        if r.cr.iter().zip(&p.profile.cr).any(|(a, b)| (a - b).abs() > 1e-12) {
            return fail("criticality differs from the dataset".into());
        }
    }
    Ok(())
}

/// Checks every method of a predictions file; fails on any invalid record
/// or a deviation above [`ORACLE_TOL`].
pub fn check(results: &[MethodResult], prepared: &[Prepared]) -> Result<Vec<OracleRow>> {
    let mut rows = Vec::new();
    for result in results {
        validate(result, prepared)?;
        let recs: Vec<(usize, Vec<f64>, Vec<f64>)> = result
            .records
            .iter()
            .zip(prepared)
            .map(|(r, p)| (r.gt_pattern, r.probs.clone(), p.profile.cr.clone()))
            .collect();
        let recomputed = naive_scores(&recs);
        let a = &result.report;
        let dev = [
            a.b - recomputed.b,
            a.g - recomputed.g,
            a.c - recomputed.c,
            a.d - recomputed.d,
            a.b_c - recomputed.b_c,
        ]
        .iter()
        .fold(0.0f64, |m, x| if x.is_nan() { f64::INFINITY } else { m.max(x.abs()) });
        rows.push(OracleRow { method: result.method.clone(), recomputed, max_abs_deviation: dev });
    }
    if let Some(bad) = rows.iter().find(|r| !(r.max_abs_deviation <= ORACLE_TOL)) {
        return Err(BenchError::Oracle(format!("{} deviates by {:e}", bad.method, bad.max_abs_deviation)));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_closed_form() {
        let recs = vec![(2, vec![0.25; 4], vec![0.0, 1.0, 2.0, 3.0]); 5];
        let r = naive_scores(&recs);
        assert!((r.b - 0.1875).abs() < 1e-15);
        assert!((r.g - 0.140625).abs() < 1e-15);
        assert!((r.c - 0.0625 * 3.0 / 4.0).abs() < 1e-15);
        assert!((r.d - 0.0625 / 4.0).abs() < 1e-15);
    }
}
