//! Prototype trajectories: one smooth, limit-respecting longitudinal
//! trajectory of the target vehicle per motion pattern.
//!
//! Each prototype is a quintic boundary-value trajectory that matches the
//! current `(x, v, a)` and reaches the pattern's terminal speed with zero
//! acceleration and jerk at the horizon. When the quintic leaves the planner
//! limits it is replaced by the gentlest jerk-limited profile that still
//! reaches the terminal speed within the horizon, or by the time-optimal
//! profile when none does (flagged infeasible). Yielding patterns are
//! additionally kept at least `min_front_gap` behind a constant-velocity
//! extrapolation of the front vehicle.

mod jerk;
mod quintic;

pub use jerk::JerkProfile;
pub use quintic::{Kinematics, Quintic};

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::types::{PatternId, PatternSet, SceneSample, Trajectory, TrajectoryPoint, FRONT, TARGET};

const LIMIT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerLimits {
    /// Braking bound (negative), m/s².
    pub a_min: f64,
    pub a_max: f64,
    pub v_max: f64,
    pub j_max: f64,
}

impl Default for PlannerLimits {
    fn default() -> Self {
        Self { a_min: -6.0, a_max: 3.0, v_max: 40.0, j_max: 15.0 }
    }
}

impl PlannerLimits {
    pub fn validate(&self) -> Result<()> {
        if !(self.a_min < 0.0 && self.a_max > 0.0 && self.v_max > 0.0 && self.j_max > 0.0) {
            return Err(CoreError::InvalidLimits(format!("{self:?}")));
        }
        Ok(())
    }

    /// Pointwise acceleration and speed bounds.
    pub fn admits(&self, p: &TrajectoryPoint) -> bool {
        p.a >= self.a_min - LIMIT_EPS
            && p.a <= self.a_max + LIMIT_EPS
            && p.v >= -LIMIT_EPS
            && p.v <= self.v_max + LIMIT_EPS
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrototypeConfig {
    pub patterns: PatternSet,
    pub limits: PlannerLimits,
    /// Minimum bumper gap to the front vehicle for yielding patterns (m).
    pub min_front_gap: f64,
    /// Minimum max-over-time position difference between two prototypes (m).
    pub min_separation: f64,
}

impl Default for PrototypeConfig {
    fn default() -> Self {
        Self {
            patterns: PatternSet::merge_default(),
            limits: PlannerLimits::default(),
            min_front_gap: 1.0,
            min_separation: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InfeasibleReason {
    /// The terminal speed cannot be reached within the horizon.
    TerminalSpeedUnreachable,
    /// The vehicle had to be held at standstill to keep speed non-negative.
    StopClamped,
    /// No yielding profile keeps the required gap to the front vehicle.
    Collision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrototypeStatus {
    /// The quintic itself respects all limits; boundary conditions are exact.
    Exact,
    /// Replaced by a jerk-limited profile that reaches the terminal speed.
    Resmoothed,
    /// Closest feasible limit trajectory; the pattern's terminal condition is not met.
    Infeasible(InfeasibleReason),
}

/// Front vehicle seen by the planner, extrapolated at constant speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontObstacle {
    pub rear_x: f64,
    pub v: f64,
}

impl FrontObstacle {
    pub fn rear_at(&self, tau: f64) -> f64 {
        self.rear_x + self.v * tau
    }
}

/// Everything the planner needs about the predicted vehicle at the current time.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanRequest {
    pub sample_id: u64,
    pub t0: f64,
    pub x: f64,
    pub y: f64,
    pub v: f64,
    pub a: f64,
    pub length: f64,
    pub width: f64,
    pub dt: f64,
    pub horizon: f64,
    pub front: Option<FrontObstacle>,
}

impl PlanRequest {
    pub fn from_sample(sample: &SceneSample) -> Result<Self> {
        let target = sample
            .history
            .get(TARGET)
            .ok_or_else(|| CoreError::InvalidSample(format!("sample {} has no target history", sample.sample_id)))?;
        let now = target.last();
        let front = sample.history.get(FRONT).map(|f| FrontObstacle { rear_x: f.rear(f.len() - 1), v: f.last().v });
        Ok(Self {
            sample_id: sample.sample_id,
            t0: now.t,
            x: now.x,
            y: now.y,
            v: now.v,
            a: now.a,
            length: target.length(),
            width: target.width(),
            dt: target.dt(),
            horizon: sample.horizon,
            front,
        })
    }

    fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }
}

/// The M prototype trajectories generated for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeSet {
    trajectories: Vec<Trajectory>,
    status: Vec<PrototypeStatus>,
    degenerate: bool,
    generated_for: u64,
    horizon: f64,
}

impl PrototypeSet {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn get(&self, id: PatternId) -> &Trajectory {
        &self.trajectories[id.index()]
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn status(&self, id: PatternId) -> PrototypeStatus {
        self.status[id.index()]
    }

    pub fn statuses(&self) -> &[PrototypeStatus] {
        &self.status
    }

    /// Set when the patterns collapsed and terminal offsets were applied.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn generated_for(&self) -> u64 {
        self.generated_for
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn ids(&self) -> impl Iterator<Item = PatternId> {
        (0..self.trajectories.len()).map(PatternId::from_index)
    }
}

/// Generates one prototype per motion pattern for the target of `sample`.
pub fn generate_prototypes(sample: &SceneSample, cfg: &PrototypeConfig) -> Result<PrototypeSet> {
    generate_from_state(&PlanRequest::from_sample(sample)?, cfg)
}

/// Profile samples relative to the current state: `(dx, v, a)` per step.
type Profile = Vec<(f64, f64, f64)>;

pub fn generate_from_state(req: &PlanRequest, cfg: &PrototypeConfig) -> Result<PrototypeSet> {
    let limits = &cfg.limits;
    limits.validate()?;
    if !(req.v >= 0.0 && req.v <= limits.v_max) {
        return Err(CoreError::InvalidSample(format!(
            "current speed {} outside [0, {}]",
            req.v, limits.v_max
        )));
    }
    if !(req.horizon > 0.0 && req.dt > 0.0) {
        return Err(CoreError::InvalidSample("horizon and dt must be positive".into()));
    }

    let patterns: Vec<_> = cfg.patterns.iter().copied().collect();
    let m = patterns.len();
    let mut profiles: Vec<Profile> = vec![Vec::new(); m];
    let mut status = vec![PrototypeStatus::Exact; m];

    for (i, p) in patterns.iter().enumerate() {
        if !(p.label.is_yielding() && req.front.is_some()) {
            let v_end = (p.terminal_speed_factor * req.v).clamp(0.0, limits.v_max);
            (profiles[i], status[i]) = plan_speed(req, v_end, limits, false);
        }
    }

    // Yielding patterns, most aggressive first; each is capped by the next
    // more aggressive one so that terminal positions stay ordered.
    if let Some(front) = req.front {
        let mut cap = f64::INFINITY;
        for i in (0..m).rev().filter(|&i| patterns[i].label.is_yielding()) {
            let v_nominal = (patterns[i].terminal_speed_factor * req.v).clamp(0.0, limits.v_max).min(cap);
            let (profile, st, v_used) = plan_yield(req, v_nominal, front, cfg);
            profiles[i] = profile;
            status[i] = st;
            cap = v_used;
        }
    }

    let mut degenerate = false;
    if !pairwise_distinct(&profiles, cfg.min_separation) {
        degenerate = true;
        let steps = req.steps();
        let horizon = steps as f64 * req.dt;
        for (i, p) in patterns.iter().enumerate() {
            if p.terminal_gap_target == 0.0 {
                continue;
            }
            let offset = Quintic::rest_to_rest(p.terminal_gap_target, horizon);
            let shifted: Profile = profiles[i]
                .iter()
                .enumerate()
                .map(|(k, &(dx, v, a))| {
                    let o = offset.eval(k as f64 * req.dt);
                    (dx + o.x, v + o.v, a + o.a)
                })
                .collect();
            let admissible = shifted.iter().all(|&(_, v, a)| {
                limits.admits(&TrajectoryPoint::new(0.0, 0.0, 0.0, v.max(0.0), a))
            });
            let safe = !p.label.is_yielding() || req.front.is_none_or(|f| !collides(req, &shifted, f, cfg.min_front_gap));
            if admissible && safe {
                profiles[i] = shifted;
            }
        }
    }

    let trajectories = profiles
        .iter()
        .map(|prof| to_trajectory(req, prof))
        .collect::<Result<Vec<_>>>()?;
    Ok(PrototypeSet { trajectories, status, degenerate, generated_for: req.sample_id, horizon: req.horizon })
}

fn to_trajectory(req: &PlanRequest, profile: &Profile) -> Result<Trajectory> {
    let points = profile
        .iter()
        .enumerate()
        .map(|(k, &(dx, v, a))| TrajectoryPoint::new(req.t0 + k as f64 * req.dt, req.x + dx, req.y, v.max(0.0), a))
        .collect();
    Trajectory::new(points, req.dt, req.length, req.width)
}

fn pairwise_distinct(profiles: &[Profile], min_sep: f64) -> bool {
    for i in 0..profiles.len() {
        for j in i + 1..profiles.len() {
            let d = profiles[i]
                .iter()
                .zip(&profiles[j])
                .map(|(a, b)| (a.0 - b.0).abs())
                .fold(0.0, f64::max);
            if d < min_sep {
                return false;
            }
        }
    }
    true
}

fn collides(req: &PlanRequest, profile: &Profile, front: FrontObstacle, min_gap: f64) -> bool {
    profile.iter().enumerate().any(|(k, &(dx, _, _))| {
        let tau = k as f64 * req.dt;
        let target_front = req.x + dx + 0.5 * req.length;
        front.rear_at(tau) - target_front < min_gap
    })
}

/// Plans a yielding pattern: the nominal terminal speed if collision free,
/// otherwise progressively lower terminal speeds, then full braking.
fn plan_yield(
    req: &PlanRequest,
    v_nominal: f64,
    front: FrontObstacle,
    cfg: &PrototypeConfig,
) -> (Profile, PrototypeStatus, f64) {
    for k in 0..=10 {
        let v_end = v_nominal * (1.0 - 0.1 * k as f64);
        let (profile, st) = plan_speed(req, v_end, &cfg.limits, false);
        if !collides(req, &profile, front, cfg.min_front_gap) {
            return (profile, st, v_end);
        }
    }
    let (profile, st) = plan_speed(req, 0.0, &cfg.limits, true);
    if collides(req, &profile, front, cfg.min_front_gap) {
        (profile, PrototypeStatus::Infeasible(InfeasibleReason::Collision), 0.0)
    } else {
        (profile, st, 0.0)
    }
}

/// Speed-change profile sampled on the horizon grid. `hardest` forces the
/// time-optimal profile instead of the quintic.
fn plan_speed(req: &PlanRequest, v_end: f64, limits: &PlannerLimits, hardest: bool) -> (Profile, PrototypeStatus) {
    let steps = req.steps();
    let horizon = steps as f64 * req.dt;

    if !hardest {
        let q = Quintic::velocity_keeping(0.0, req.v, req.a, v_end, horizon);
        let profile: Vec<Kinematics> = (0..=steps).map(|k| q.eval(k as f64 * req.dt)).collect();
        let feasible = profile.iter().all(|s| {
            limits.admits(&TrajectoryPoint::new(0.0, 0.0, 0.0, s.v, s.a)) && s.j.abs() <= limits.j_max + LIMIT_EPS
        });
        if feasible {
            return (profile.iter().map(|s| (s.x, s.v.max(0.0), s.a)).collect(), PrototypeStatus::Exact);
        }
    }

    let a0 = req.a.clamp(limits.a_min, limits.a_max);
    let profile_for = |scale: f64| {
        JerkProfile::plan(req.v, a0, v_end, scale * limits.a_max, -scale * limits.a_min, limits.j_max)
    };
    let full = profile_for(1.0);
    let (chosen, mut status) = if hardest {
        (full, PrototypeStatus::Resmoothed)
    } else if full.duration() > horizon + 1e-12 {
        (full, PrototypeStatus::Infeasible(InfeasibleReason::TerminalSpeedUnreachable))
    } else {
        let (mut lo, mut hi) = (1e-3, 1.0);
        if profile_for(lo).duration() <= horizon {
            hi = lo;
        } else {
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if profile_for(mid).duration() <= horizon {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
        }
        (profile_for(hi), PrototypeStatus::Resmoothed)
    };

    let mut out = Vec::with_capacity(steps + 1);
    let mut stopped_at: Option<f64> = None;
    for k in 0..=steps {
        let t = k as f64 * req.dt;
        if let Some(x_stop) = stopped_at {
            out.push((x_stop, 0.0, 0.0));
            continue;
        }
        let (x, v, a) = chosen.sample(t);
        if v < -1e-12 {
            let x_stop = stop_position(&chosen, t - req.dt, t);
            stopped_at = Some(x_stop);
            status = PrototypeStatus::Infeasible(InfeasibleReason::StopClamped);
            out.push((x_stop, 0.0, 0.0));
        } else {
            out.push((x, v.clamp(0.0, limits.v_max), a.clamp(limits.a_min, limits.a_max)));
        }
    }
    (out, status)
}

/// Position where the profile's speed first crosses zero inside `[lo, hi]`.
fn stop_position(profile: &JerkProfile, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if profile.sample(mid).1 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    profile.sample(lo).0
}

/// Root-mean-square position distance between two equally sampled trajectories.
pub fn rms_distance(a: &Trajectory, b: &Trajectory) -> f64 {
    let n = a.len().min(b.len());
    let ss: f64 = a.points()[..n].iter().zip(&b.points()[..n]).map(|(p, q)| (p.x - q.x).powi(2)).sum();
    (ss / n as f64).sqrt()
}

/// Ground-truth pattern: the prototype closest in RMS position distance to
/// the realized future, ties resolved to the lower pattern id.
pub fn label_ground_truth(sample: &SceneSample, protos: &PrototypeSet) -> PatternId {
    label_trajectory(&sample.future_predicted, protos)
}

pub fn label_trajectory(future: &Trajectory, protos: &PrototypeSet) -> PatternId {
    let mut best = PatternId(1);
    let mut best_d = f64::INFINITY;
    for id in protos.ids() {
        let d = rms_distance(future, protos.get(id));
        if d < best_d {
            best_d = d;
            best = id;
        }
    }
    best
}
