//! Criticality of (prototype, host ground truth) pairs as inverse
//! time-to-collision of the target's front bumper with the merge point.

use serde::{Deserialize, Serialize};

use crate::protogen::PrototypeSet;
use crate::types::{PatternId, SceneSample, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CriticalityConfig {
    /// Upper clamp on inverse TTC (1/s).
    pub cr_max: f64,
}

impl Default for CriticalityConfig {
    fn default() -> Self {
        Self { cr_max: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalityProfile {
    /// Criticality per pattern, indexed by pattern id - 1.
    pub cr: Vec<f64>,
    pub cr_gt: f64,
    /// Pattern ids sorted by ascending criticality, ties by id.
    pub order: Vec<PatternId>,
    /// Number of patterns strictly less critical than the ground truth.
    pub m_index: usize,
}

impl CriticalityProfile {
    /// Builds the profile from per-pattern criticalities.
    pub fn from_values(cr: Vec<f64>, gt: PatternId) -> Self {
        let cr_gt = cr[gt.index()];
        let mut order: Vec<PatternId> = (0..cr.len()).map(PatternId::from_index).collect();
        order.sort_by(|a, b| cr[a.index()].total_cmp(&cr[b.index()]).then(a.cmp(b)));
        let m_index = cr.iter().filter(|&&c| c < cr_gt).count();
        Self { cr, cr_gt, order, m_index }
    }
}

fn lateral_clearance(host: &Trajectory, target: &Trajectory, i: usize, j: usize) -> f64 {
    let half = 0.5 * (host.width() + target.width());
    (host.points()[i].y - target.points()[j].y).abs() - half
}

/// Rear-bumper position of the host at the first instant its body overlaps
/// the target's path laterally, or `None` within the horizon.
///
/// Between samples the lateral clearance and position are interpolated
/// linearly.
pub fn merge_point(host_future: &Trajectory, target_path: &Trajectory) -> Option<f64> {
    let n = host_future.len().min(target_path.len());
    let clearance: Vec<f64> = (0..n).map(|i| lateral_clearance(host_future, target_path, i, i)).collect();
    if clearance[0] < 0.0 {
        return Some(host_future.rear(0));
    }
    for k in 1..n {
        if clearance[k] < 0.0 {
            let f = clearance[k - 1] / (clearance[k - 1] - clearance[k]);
            let r0 = host_future.rear(k - 1);
            let r1 = host_future.rear(k);
            return Some(r0 + f * (r1 - r0));
        }
    }
    None
}

/// Time from the first sample until the target's front bumper reaches the
/// fixed merge position.
///
/// Returns 0 when the front is already at or past `merge_x` while the rear
/// is not (bodies overlap now), and `+inf` when the target is entirely past
/// the point or does not reach it within the trajectory.
pub fn ttc(target: &Trajectory, merge_x: f64) -> f64 {
    let gap = |i: usize| merge_x - target.front(i);
    if gap(0) <= 0.0 {
        return if target.rear(0) >= merge_x { f64::INFINITY } else { 0.0 };
    }
    let t0 = target.start_time();
    for k in 1..target.len() {
        let g = gap(k);
        if g <= 0.0 {
            let g_prev = gap(k - 1);
            let tp = target.points()[k - 1].t;
            return tp + g_prev / (g_prev - g) * target.dt() - t0;
        }
    }
    f64::INFINITY
}

/// Inverse TTC clamped to `[0, cr_max]`.
pub fn inverse_ttc(ttc: f64, cr_max: f64) -> f64 {
    if ttc <= 0.0 {
        cr_max
    } else {
        (1.0 / ttc).clamp(0.0, cr_max)
    }
}

/// Criticality of every prototype paired with the host's ground-truth future.
pub fn criticality_profile(sample: &SceneSample, protos: &PrototypeSet, cfg: &CriticalityConfig) -> CriticalityProfile {
    let merge = merge_point(&sample.future_host, &sample.future_predicted);
    let cr = protos
        .trajectories()
        .iter()
        .map(|tr| match merge {
            Some(mx) => inverse_ttc(ttc(tr, mx), cfg.cr_max),
            None => 0.0,
        })
        .collect();
    CriticalityProfile::from_values(cr, sample.gt_pattern)
}
