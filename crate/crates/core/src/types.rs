//! Shared domain types: trajectories, motion patterns, scene samples and
//! pattern probability distributions, plus the joint-to-conditional
//! transformation used by situation predictors.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Normalization tolerance for probability vectors.
pub const PROB_TOL: f64 = 1e-9;

/// Tolerance on the spacing of consecutive timestamps.
pub const TIME_TOL: f64 = 1e-9;

/// Entity index of the host (merging) vehicle.
pub const HOST: usize = 0;
/// Entity index of the predicted (target) vehicle.
pub const TARGET: usize = 1;
/// Entity index of the optional front vehicle in the target lane.
pub const FRONT: usize = 2;

/// One kinematic sample of a vehicle.
///
/// `x` is the longitudinal position of the vehicle center along the lane
/// centerline, `y` the lateral offset of the center from the target-lane
/// centerline. `a` is the acceleration applied from this sample to the next.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub v: f64,
    pub a: f64,
}

impl TrajectoryPoint {
    pub fn new(t: f64, x: f64, y: f64, v: f64, a: f64) -> Self {
        Self { t, x, y, v, a }
    }
}

/// Uniformly sampled longitudinal trajectory of one vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    points: Vec<TrajectoryPoint>,
    dt: f64,
    length: f64,
    width: f64,
}

impl Trajectory {
    pub fn new(points: Vec<TrajectoryPoint>, dt: f64, length: f64, width: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(CoreError::InvalidTrajectory(format!("dt must be positive, got {dt}")));
        }
        if points.len() < 2 {
            return Err(CoreError::InvalidTrajectory(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        if !(length > 0.0) || !(width > 0.0) {
            return Err(CoreError::InvalidTrajectory(format!(
                "vehicle dimensions must be positive, got {length} x {width}"
            )));
        }
        for (i, p) in points.iter().enumerate() {
            if ![p.t, p.x, p.y, p.v, p.a].iter().all(|c| c.is_finite()) {
                return Err(CoreError::InvalidTrajectory(format!("non-finite value at point {i}")));
            }
            if p.v < 0.0 {
                return Err(CoreError::InvalidTrajectory(format!(
                    "negative speed {} at point {i}",
                    p.v
                )));
            }
        }
        for (i, w) in points.windows(2).enumerate() {
            if ((w[1].t - w[0].t) - dt).abs() > TIME_TOL {
                return Err(CoreError::InvalidTrajectory(format!(
                    "time step {} between points {i} and {} differs from dt {dt}",
                    w[1].t - w[0].t,
                    i + 1
                )));
            }
        }
        Ok(Self { points, dt, length, width })
    }

    pub fn points(&self) -> &[TrajectoryPoint] {
        &self.points
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> &TrajectoryPoint {
        &self.points[0]
    }

    pub fn last(&self) -> &TrajectoryPoint {
        &self.points[self.points.len() - 1]
    }

    pub fn start_time(&self) -> f64 {
        self.first().t
    }

    pub fn duration(&self) -> f64 {
        self.last().t - self.first().t
    }

    /// Longitudinal position of the front bumper at sample `i`.
    pub fn front(&self, i: usize) -> f64 {
        self.points[i].x + 0.5 * self.length
    }

    /// Longitudinal position of the rear bumper at sample `i`.
    pub fn rear(&self, i: usize) -> f64 {
        self.points[i].x - 0.5 * self.length
    }

    /// Sub-trajectory over the inclusive index range `[start, end]`.
    pub fn slice(&self, start: usize, end: usize) -> Result<Trajectory> {
        if end >= self.points.len() || start >= end {
            return Err(CoreError::InvalidTrajectory(format!(
                "slice [{start}, {end}] out of bounds for {} points",
                self.points.len()
            )));
        }
        Trajectory::new(self.points[start..=end].to_vec(), self.dt, self.length, self.width)
    }

    /// Checks `|x(t+dt) - x(t) - v(t) dt| <= 0.5 a_max dt^2` on every step.
    pub fn is_kinematically_consistent(&self, a_max: f64) -> bool {
        let bound = 0.5 * a_max * self.dt * self.dt + 1e-9;
        self.points
            .windows(2)
            .all(|w| (w[1].x - w[0].x - w[0].v * self.dt).abs() <= bound)
    }

    /// Backward-difference acceleration realized over the step ending at `i`.
    pub fn realized_accel(&self, i: usize) -> Option<f64> {
        (i > 0).then(|| (self.points[i].v - self.points[i - 1].v) / self.dt)
    }
}

/// One-based motion-pattern identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PatternId(pub usize);

impl PatternId {
    /// Zero-based position in probability and criticality vectors.
    pub fn index(self) -> usize {
        self.0 - 1
    }

    pub fn from_index(i: usize) -> Self {
        PatternId(i + 1)
    }
}

impl std::fmt::Display for PatternId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Executed-behavior classes of the target vehicle, least aggressive first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PatternLabel {
    HardYield,
    Yield,
    KeepGap,
    CloseGap,
}

impl PatternLabel {
    pub fn is_yielding(self) -> bool {
        matches!(self, PatternLabel::HardYield | PatternLabel::Yield)
    }

    pub fn default_speed_factor(self) -> f64 {
        match self {
            PatternLabel::HardYield => 0.3,
            PatternLabel::Yield => 0.7,
            PatternLabel::KeepGap => 1.0,
            PatternLabel::CloseGap => 1.2,
        }
    }

    /// Extra terminal displacement used to separate collapsed prototype sets.
    pub fn default_gap_target(self) -> f64 {
        match self {
            PatternLabel::HardYield => 0.0,
            PatternLabel::Yield => 0.6,
            PatternLabel::KeepGap => 1.2,
            PatternLabel::CloseGap => 1.8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionPattern {
    pub id: PatternId,
    pub label: PatternLabel,
    /// Terminal speed as a multiple of the current speed.
    pub terminal_speed_factor: f64,
    /// Terminal displacement offset (m) applied when a prototype set collapses.
    pub terminal_gap_target: f64,
}

/// Validated, aggressiveness-ordered set of motion patterns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<MotionPattern>", into = "Vec<MotionPattern>")]
pub struct PatternSet {
    patterns: Vec<MotionPattern>,
}

impl PatternSet {
    pub fn new(mut patterns: Vec<MotionPattern>) -> Result<Self> {
        if patterns.len() < 2 {
            return Err(CoreError::InvalidPatternSet(format!(
                "need at least 2 patterns, got {}",
                patterns.len()
            )));
        }
        patterns.sort_by_key(|p| p.id);
        for (i, p) in patterns.iter().enumerate() {
            if p.id != PatternId::from_index(i) {
                return Err(CoreError::InvalidPatternSet(format!(
                    "pattern ids must cover 1..={} exactly",
                    patterns.len()
                )));
            }
            if !(p.terminal_speed_factor >= 0.0) || !p.terminal_gap_target.is_finite() {
                return Err(CoreError::InvalidPatternSet(format!("pattern {} has invalid terminal conditions", p.id)));
            }
        }
        for w in patterns.windows(2) {
            if w[1].label < w[0].label || w[1].terminal_speed_factor < w[0].terminal_speed_factor {
                return Err(CoreError::InvalidPatternSet(format!(
                    "pattern {} is less aggressive than pattern {}",
                    w[1].id, w[0].id
                )));
            }
        }
        Ok(Self { patterns })
    }

    /// The four merge-interaction patterns with default terminal conditions.
    pub fn merge_default() -> Self {
        let labels = [PatternLabel::HardYield, PatternLabel::Yield, PatternLabel::KeepGap, PatternLabel::CloseGap];
        let patterns = labels
            .iter()
            .enumerate()
            .map(|(i, &label)| MotionPattern {
                id: PatternId::from_index(i),
                label,
                terminal_speed_factor: label.default_speed_factor(),
                terminal_gap_target: label.default_gap_target(),
            })
            .collect();
        Self::new(patterns).expect("default pattern set is valid")
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MotionPattern> {
        self.patterns.iter()
    }

    pub fn get(&self, id: PatternId) -> Option<&MotionPattern> {
        self.patterns.get(id.0.wrapping_sub(1))
    }
}

impl TryFrom<Vec<MotionPattern>> for PatternSet {
    type Error = CoreError;

    fn try_from(v: Vec<MotionPattern>) -> Result<Self> {
        PatternSet::new(v)
    }
}

impl From<PatternSet> for Vec<MotionPattern> {
    fn from(s: PatternSet) -> Self {
        s.patterns
    }
}

/// Interaction outcome class used as the situation label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Situation {
    /// The target keeps its position and the host ends up behind it.
    TargetFirst,
    /// The host merges in front of the target.
    HostFirst,
}

impl Situation {
    pub const ALL: [Situation; 2] = [Situation::TargetFirst, Situation::HostFirst];

    pub fn index(self) -> usize {
        match self {
            Situation::TargetFirst => 0,
            Situation::HostFirst => 1,
        }
    }
}

/// Static scenario facts a predictor may condition on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneContext {
    pub speed_limit: f64,
    pub ramp_end_x: f64,
}

/// Simulator-only latent state, available for synthetic episodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatentState {
    pub yield_param: f64,
    /// Whether the target had already switched to yielding at the current time.
    pub yielding: bool,
}

/// One evaluation unit: histories of all entities plus ground-truth futures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSample {
    pub sample_id: u64,
    pub episode_id: u64,
    /// Histories indexed by entity (0 host, 1 target, 2 front when present).
    pub history: Vec<Trajectory>,
    pub future_host: Trajectory,
    pub future_predicted: Trajectory,
    pub gt_pattern: PatternId,
    pub horizon: f64,
    pub context: SceneContext,
    pub situation: Situation,
    pub latent: Option<LatentState>,
}

impl SceneSample {
    pub fn n_entities(&self) -> usize {
        self.history.len()
    }

    pub fn now(&self) -> f64 {
        self.history[TARGET].last().t
    }

    pub fn host_history(&self) -> &Trajectory {
        &self.history[HOST]
    }

    pub fn target_history(&self) -> &Trajectory {
        &self.history[TARGET]
    }

    pub fn front_history(&self) -> Option<&Trajectory> {
        self.history.get(FRONT)
    }

    /// Checks entity layout and that both futures span the horizon from now.
    pub fn validate(&self, m: usize) -> Result<()> {
        if self.history.len() < 2 {
            return Err(CoreError::InvalidSample(format!(
                "sample {} needs host and target histories",
                self.sample_id
            )));
        }
        let now = self.now();
        for (name, fut) in [("host", &self.future_host), ("predicted", &self.future_predicted)] {
            if (fut.start_time() - now).abs() > TIME_TOL || (fut.duration() - self.horizon).abs() > 1e-6 {
                return Err(CoreError::InvalidSample(format!(
                    "sample {}: {name} future does not span the horizon from t={now}",
                    self.sample_id
                )));
            }
        }
        if self.gt_pattern.0 == 0 || self.gt_pattern.0 > m {
            return Err(CoreError::PatternOutOfRange { pattern: self.gt_pattern.0, m });
        }
        Ok(())
    }
}

/// Normalized probabilities over the M motion patterns of one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PredictionDistribution {
    probs: Vec<f64>,
}

impl PredictionDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(CoreError::InvalidDistribution("empty probability vector".into()));
        }
        for (j, &p) in probs.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(CoreError::InvalidDistribution(format!(
                    "probability {p} of pattern {} outside [0, 1]",
                    j + 1
                )));
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(CoreError::InvalidDistribution(format!("probabilities sum to {total}")));
        }
        Ok(Self { probs })
    }

    pub fn uniform(m: usize) -> Self {
        Self { probs: vec![1.0 / m as f64; m] }
    }

    pub fn one_hot(m: usize, id: PatternId) -> Result<Self> {
        if id.0 == 0 || id.0 > m {
            return Err(CoreError::PatternOutOfRange { pattern: id.0, m });
        }
        let mut probs = vec![0.0; m];
        probs[id.index()] = 1.0;
        Ok(Self { probs })
    }

    /// Softmax of unnormalized log weights with max subtraction.
    ///
    /// Entries equal to `-inf` get probability zero; at least one entry must
    /// be finite.
    pub fn from_log_weights(log_w: &[f64]) -> Result<Self> {
        let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() || log_w.iter().any(|w| w.is_nan()) {
            return Err(CoreError::InvalidDistribution("log weights have no finite maximum".into()));
        }
        let w: Vec<f64> = log_w.iter().map(|&l| (l - max).exp()).collect();
        let z: f64 = w.iter().sum();
        Ok(Self { probs: w.into_iter().map(|x| x / z).collect() })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn m(&self) -> usize {
        self.probs.len()
    }

    pub fn get(&self, id: PatternId) -> f64 {
        self.probs[id.index()]
    }
}

impl TryFrom<Vec<f64>> for PredictionDistribution {
    type Error = CoreError;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        PredictionDistribution::new(v)
    }
}

impl From<PredictionDistribution> for Vec<f64> {
    fn from(d: PredictionDistribution) -> Self {
        d.probs
    }
}

/// Joint probabilities over (host pattern, target pattern) pairs, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl JointTable {
    /// Builds a joint table that must be non-negative and sum to one.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let table = Self::unnormalized(rows)?;
        let total: f64 = table.data.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(CoreError::InvalidJoint(format!("entries sum to {total}")));
        }
        Ok(table)
    }

    /// Builds a non-negative table without requiring unit mass.
    pub fn unnormalized(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if n_rows == 0 || n_cols == 0 {
            return Err(CoreError::InvalidJoint("empty table".into()));
        }
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(CoreError::InvalidJoint("ragged rows".into()));
        }
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        if data.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(CoreError::InvalidJoint("entries must be finite and non-negative".into()));
        }
        Ok(Self { rows: n_rows, cols: n_cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Conditional of the target pattern given the host pattern row.
    pub fn conditional(&self, host_pattern: usize) -> Result<PredictionDistribution> {
        if host_pattern >= self.rows {
            return Err(CoreError::PatternOutOfRange { pattern: host_pattern, m: self.rows });
        }
        let row = self.row(host_pattern);
        let marginal: f64 = row.iter().sum();
        if marginal < 1e-12 {
            return Err(CoreError::ZeroMarginal { row: host_pattern });
        }
        Ok(PredictionDistribution { probs: row.iter().map(|p| p / marginal).collect() })
    }
}

/// Turns a situation (joint) prediction into a reaction (conditional)
/// prediction by conditioning on the host's pattern row (0-based).
pub fn situation_to_reaction(joint: &JointTable, host_pattern: usize) -> Result<PredictionDistribution> {
    joint.conditional(host_pattern)
}

/// One-hot outcome vector of a sample over `m` patterns.
pub fn outcome_vector(sample: &SceneSample, m: usize) -> Result<Vec<f64>> {
    outcome_for(sample.gt_pattern, m)
}

pub(crate) fn outcome_for(gt: PatternId, m: usize) -> Result<Vec<f64>> {
    if gt.0 == 0 || gt.0 > m {
        return Err(CoreError::PatternOutOfRange { pattern: gt.0, m });
    }
    let mut o = vec![0.0; m];
    o[gt.index()] = 1.0;
    Ok(o)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn straight(n: usize, dt: f64, v: f64) -> Trajectory {
        let pts = (0..n).map(|k| TrajectoryPoint::new(k as f64 * dt, v * k as f64 * dt, 0.0, v, 0.0)).collect();
        Trajectory::new(pts, dt, 4.5, 1.8).unwrap()
    }

    fn sample_with_gt(gt: usize) -> SceneSample {
        let tr = straight(31, 0.1, 10.0);
        SceneSample {
            sample_id: 0,
            episode_id: 0,
            history: vec![tr.clone(), tr.clone()],
            future_host: tr.clone(),
            future_predicted: tr,
            gt_pattern: PatternId(gt),
            horizon: 3.0,
            context: SceneContext { speed_limit: 15.0, ramp_end_x: 200.0 },
            situation: Situation::TargetFirst,
            latent: None,
        }
    }

    #[test]
    fn uniform_joint_gives_uniform_conditional() {
        let joint = JointTable::new(vec![vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap();
        let p = situation_to_reaction(&joint, 0).unwrap();
        assert_eq!(p.probs(), &[0.5, 0.5]);
    }

    #[test]
    fn joint_row_normalization() {
        // 0.4 / 0.5 and 0.1 / 0.5
        let joint = JointTable::new(vec![vec![0.4, 0.1], vec![0.2, 0.3]]).unwrap();
        let p = situation_to_reaction(&joint, 0).unwrap();
        assert!((p.probs()[0] - 0.8).abs() < 1e-15);
        assert!((p.probs()[1] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn zero_row_is_rejected() {
        let joint = JointTable::new(vec![vec![0.0, 0.0], vec![0.5, 0.5]]).unwrap();
        assert_eq!(situation_to_reaction(&joint, 0), Err(CoreError::ZeroMarginal { row: 0 }));
    }

    #[test]
    fn joint_must_be_normalized() {
        assert!(JointTable::new(vec![vec![0.5, 0.6]]).is_err());
        assert!(JointTable::new(vec![vec![-0.1, 1.1]]).is_err());
    }

    #[test]
    fn outcome_vectors() {
        assert_eq!(outcome_vector(&sample_with_gt(2), 4).unwrap(), vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(outcome_vector(&sample_with_gt(1), 1).unwrap(), vec![1.0]);
        assert_eq!(
            outcome_vector(&sample_with_gt(5), 4),
            Err(CoreError::PatternOutOfRange { pattern: 5, m: 4 })
        );
    }

    #[test]
    fn trajectory_rejects_irregular_time() {
        let mut pts: Vec<_> = straight(5, 0.1, 1.0).points().to_vec();
        pts[3].t += 0.01;
        assert!(Trajectory::new(pts, 0.1, 4.5, 1.8).is_err());
        assert!(Trajectory::new(vec![TrajectoryPoint::new(0.0, 0.0, 0.0, 1.0, 0.0)], 0.1, 4.5, 1.8).is_err());
    }

    #[test]
    fn trajectory_rejects_reversing() {
        let mut pts: Vec<_> = straight(5, 0.1, 1.0).points().to_vec();
        pts[2].v = -0.5;
        assert!(Trajectory::new(pts, 0.1, 4.5, 1.8).is_err());
    }

    #[test]
    fn kinematic_consistency() {
        let tr = straight(10, 0.1, 10.0);
        assert!(tr.is_kinematically_consistent(0.0));
        let mut pts = tr.points().to_vec();
        pts[5].x += 0.5;
        let bad = Trajectory::new(pts, 0.1, 4.5, 1.8).unwrap();
        assert!(!bad.is_kinematically_consistent(3.0));
    }

    #[test]
    fn pattern_set_validation() {
        let set = PatternSet::merge_default();
        assert_eq!(set.len(), 4);
        let mut v: Vec<MotionPattern> = set.clone().into();
        v[3].id = PatternId(3);
        assert!(PatternSet::new(v).is_err());
        let mut v: Vec<MotionPattern> = set.into();
        v.swap(0, 3);
        v[0].id = PatternId(1);
        v[3].id = PatternId(4);
        assert!(PatternSet::new(v).is_err());
    }

    #[test]
    fn distribution_from_log_weights() {
        let p = PredictionDistribution::from_log_weights(&[0.0, -(3f64.ln())]).unwrap();
        assert!((p.probs()[0] - 0.75).abs() < 1e-15);
        let p = PredictionDistribution::from_log_weights(&[1000.0, f64::NEG_INFINITY]).unwrap();
        assert_eq!(p.probs(), &[1.0, 0.0]);
        assert!(PredictionDistribution::from_log_weights(&[f64::NEG_INFINITY; 3]).is_err());
    }

    fn stochastic_matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (1usize..5, 1usize..5).prop_flat_map(|(r, c)| {
            prop::collection::vec(prop::collection::vec(0.001f64..1.0, c), r).prop_map(|rows| {
                let total: f64 = rows.iter().flatten().sum();
                rows.into_iter().map(|row| row.into_iter().map(|p| p / total).collect()).collect()
            })
        })
    }

    proptest! {
        #[test]
        fn conditional_is_normalized(rows in stochastic_matrix(), pick in 0usize..5) {
            let host = pick % rows.len();
            let joint = JointTable::new(rows).unwrap();
            let p = situation_to_reaction(&joint, host).unwrap();
            let s: f64 = p.probs().iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-9);
        }

        #[test]
        fn conditional_is_scale_invariant(rows in stochastic_matrix(), pick in 0usize..5, c in 0.01f64..100.0) {
            let host = pick % rows.len();
            let base = JointTable::new(rows.clone()).unwrap().conditional(host).unwrap();
            let scaled_rows = rows.into_iter().map(|r| r.into_iter().map(|p| p * c).collect()).collect();
            let scaled = JointTable::unnormalized(scaled_rows).unwrap().conditional(host).unwrap();
            for (a, b) in base.probs().iter().zip(scaled.probs()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn brier_terms_bounded(raw in prop::collection::vec(0.0f64..1.0, 4), gt in 1usize..5) {
            let total: f64 = raw.iter().sum::<f64>() + 1e-9;
            let probs: Vec<f64> = raw.iter().map(|p| (p + 0.25e-9) / total).collect();
            let o = outcome_vector(&sample_with_gt(gt), 4).unwrap();
            for (p, o) in probs.iter().zip(&o) {
                let term = (p - o).powi(2);
                prop_assert!((0.0..=1.0).contains(&term));
            }
        }
    }
}
