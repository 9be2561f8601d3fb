//! Longitudinal merge simulator.
//!
//! The host drives on the ramp next to the target and nudges toward the
//! target lane, merging once it is far enough ahead of the target's front
//! bumper. The target follows its leader with the IDM. While the host
//! nudges, the target may switch (once, stochastically) to yielding, after
//! which it treats the host as its leader. A non-yielding target closes the
//! gap to its front vehicle instead. Near the ramp end the host aborts,
//! drops behind the target and merges into the gap behind it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DatagenError, Episode, IdmParams, MergeOutcome, Result, ScenarioConfig, COMPLETION_TOL};
use crate::types::{SceneSample, Trajectory, TrajectoryPoint, FRONT, HOST, TARGET};

/// Lateral speed of a full merge (m/s).
const MERGE_LATERAL_SPEED: f64 = 1.0;
/// Lateral speed while nudging or backing off (m/s).
const NUDGE_LATERAL_SPEED: f64 = 0.4;
/// Lateral clearance kept from the target's path while nudging (m).
const NUDGE_CLEARANCE: f64 = 0.3;
/// Lateral travel that counts as having started to nudge (m).
const NUDGE_ONSET: f64 = 0.15;
/// Mean reaction time of the yield decision (s).
const YIELD_REACTION: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub v: f64,
}

impl VehicleState {
    fn from_point(p: &TrajectoryPoint) -> Self {
        Self { x: p.x, y: p.y, v: p.v }
    }
}

fn idm(v: f64, leader: Option<(f64, f64)>, v_desired: f64, p: &IdmParams, headway_scale: f64) -> f64 {
    let free = 1.0 - (v / v_desired).powi(4);
    let interaction = match leader {
        Some((gap, v_lead)) => {
            let s_star = p.desired_gap * headway_scale
                + (v * p.time_headway * headway_scale + v * (v - v_lead) / (2.0 * (p.max_accel * p.comfortable_decel).sqrt()))
                    .max(0.0);
            (s_star / gap.max(0.1)).powi(2)
        }
        None => 0.0,
    };
    (p.max_accel * (free - interaction)).clamp(-2.0 * p.comfortable_decel, p.max_accel)
}

fn bumper_gap(follower: &VehicleState, leader: &VehicleState, length: f64) -> f64 {
    (leader.x - 0.5 * length) - (follower.x + 0.5 * length)
}

fn host_is_nudging(cfg: &ScenarioConfig, host: &VehicleState, target: &VehicleState) -> bool {
    (host.y - target.y).abs() < cfg.lane_width - NUDGE_ONSET
}

/// Per-step probability that a not-yet-yielding target starts yielding.
pub fn yield_switch_probability(cfg: &ScenarioConfig, yield_param: f64, target: &VehicleState, host: &VehicleState) -> f64 {
    let host_gap = bumper_gap(target, host, cfg.vehicle_length);
    if !host_is_nudging(cfg, host, target) || host_gap <= -cfg.vehicle_length {
        return 0.0;
    }
    if yield_param >= 1.0 {
        return 1.0;
    }
    if yield_param <= 0.0 {
        return 0.0;
    }
    let deficit = (merge_gap(cfg) - host_gap).max(0.0);
    let z = 10.0 * (yield_param - 0.5) - 0.5 * deficit;
    let willingness = 1.0 / (1.0 + (-z).exp());
    (willingness * cfg.dt / YIELD_REACTION).min(1.0)
}

fn merge_gap(cfg: &ScenarioConfig) -> f64 {
    0.5 * cfg.idm.desired_gap + 0.5
}

/// Target acceleration given the surrounding vehicles and its yield state.
pub fn target_accel(
    cfg: &ScenarioConfig,
    target: &VehicleState,
    host: &VehicleState,
    front: Option<&VehicleState>,
    yielding: bool,
) -> f64 {
    let len = cfg.vehicle_length;
    let host_gap = bumper_gap(target, host, len);
    let host_in_path = (host.y - target.y).abs() < cfg.vehicle_width;
    let contested = host_is_nudging(cfg, host, target) && host_gap > -len;
    let closing = !yielding && contested;
    let scale = if closing { 0.5 } else { 1.0 };

    let mut a = idm(target.v, front.map(|f| (bumper_gap(target, f, len), f.v)), cfg.speed_limit, &cfg.idm, scale);
    if (host_in_path && host_gap > 0.0) || (yielding && host_gap > -len) {
        a = a.min(idm(target.v, Some((host_gap, host.v)), cfg.speed_limit, &cfg.idm, 1.0));
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum HostMode {
    Nudge,
    Merging,
    Aborting,
    MergeBehind,
    Done,
}

struct Host<'a> {
    cfg: &'a ScenarioConfig,
    mode: HostMode,
}

impl Host<'_> {
    fn step(&mut self, host: &VehicleState, target: &VehicleState, front: &VehicleState) -> (f64, f64) {
        let cfg = self.cfg;
        let p = &cfg.idm;
        let len = cfg.vehicle_length;
        let host_front = host.x + 0.5 * len;
        let gap_ahead_of_target = bumper_gap(target, host, len);
        let front_gap = bumper_gap(host, front, len);
        let ramp_stop = idm(host.v, Some((cfg.ramp_end_x - host_front, 0.0)), cfg.speed_limit, p, 1.0);
        let follow_front = idm(host.v, Some((front_gap, front.v)), cfg.speed_limit, p, 0.5);

        if self.mode == HostMode::Nudge {
            if gap_ahead_of_target >= merge_gap(cfg) && front_gap >= p.desired_gap {
                self.mode = HostMode::Merging;
            } else if host_front >= cfg.ramp_end_x - cfg.abort_margin {
                self.mode = HostMode::Aborting;
            }
        }
        if self.mode == HostMode::Aborting && bumper_gap(host, target, len) >= p.desired_gap {
            self.mode = HostMode::MergeBehind;
        }
        if matches!(self.mode, HostMode::Merging | HostMode::MergeBehind) && (host.y - target.y).abs() <= COMPLETION_TOL {
            self.mode = HostMode::Done;
        }

        let nudge_y = target.y + cfg.vehicle_width + NUDGE_CLEARANCE;
        let ramp_y = target.y + cfg.lane_width;
        let (accel, y_goal, lateral_speed) = match self.mode {
            HostMode::Nudge => {
                let push = 0.8 * (target.v + 1.0 - host.v) + 0.3 * (merge_gap(cfg) + 2.0 - gap_ahead_of_target);
                let alongside = host.x - target.x > -0.5 * len;
                let y_goal = if alongside { nudge_y } else { ramp_y };
                (push.min(follow_front).min(ramp_stop), y_goal, NUDGE_LATERAL_SPEED)
            }
            HostMode::Merging => (follow_front, target.y, MERGE_LATERAL_SPEED),
            HostMode::Aborting => ((-1.5 * p.comfortable_decel).min(ramp_stop), ramp_y, NUDGE_LATERAL_SPEED),
            HostMode::MergeBehind => {
                let behind = idm(host.v, Some((bumper_gap(host, target, len), target.v)), cfg.speed_limit, p, 1.0);
                (behind.min(ramp_stop), target.y, MERGE_LATERAL_SPEED)
            }
            HostMode::Done => {
                let a = if host.x > target.x {
                    follow_front
                } else {
                    idm(host.v, Some((bumper_gap(host, target, len), target.v)), cfg.speed_limit, p, 1.0)
                };
                (a, target.y, MERGE_LATERAL_SPEED)
            }
        };
        let step = lateral_speed * cfg.dt;
        let y_next = host.y + (y_goal - host.y).clamp(-step, step);
        (accel.clamp(-2.0 * p.comfortable_decel, p.max_accel), y_next)
    }
}

/// Applies `a` over one step, stopping exactly at zero speed.
fn integrate(s: &VehicleState, a: f64, dt: f64) -> (VehicleState, f64) {
    let a = if s.v + a * dt < 0.0 { -s.v / dt } else { a };
    let next = VehicleState { x: s.x + s.v * dt + 0.5 * a * dt * dt, y: s.y, v: (s.v + a * dt).max(0.0) };
    (next, a)
}

/// Simulates one merge episode; deterministic in `(config, seed)`.
pub fn simulate_episode(cfg: &ScenarioConfig, seed: u64) -> Result<Episode> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = cfg.vehicle_length;

    let [lo, hi] = cfg.yield_param_range;
    let yield_param = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
    let v_target = rng.gen_range(7.0..13.0);
    let mut target = VehicleState { x: 60.0, y: 0.0, v: v_target };
    let mut front = VehicleState {
        x: target.x + len + rng.gen_range(12.0..30.0),
        y: 0.0,
        v: (v_target + rng.gen_range(-1.5..1.0)).max(0.0),
    };
    let mut host = VehicleState {
        x: target.x + rng.gen_range(-5.0..5.0),
        y: cfg.lane_width,
        v: (v_target + rng.gen_range(-1.0..1.5)).max(0.0),
    };
    if host.x + 0.5 * len >= cfg.ramp_end_x {
        return Err(DatagenError::ConfigInvalid("ramp ends before the host's start position".into()));
    }

    let steps = cfg.steps(cfg.episode_duration);
    let mut points: [Vec<TrajectoryPoint>; 3] = Default::default();
    let mut host_policy = Host { cfg, mode: HostMode::Nudge };
    let mut yielding = false;
    let mut yield_onset = None;

    for k in 0..=steps {
        let t = k as f64 * cfg.dt;
        if !yielding {
            let p = yield_switch_probability(cfg, yield_param, &target, &host);
            if p > 0.0 && (p >= 1.0 || rng.gen::<f64>() < p) {
                yielding = true;
                yield_onset = Some(t);
            }
        }
        let a_target = target_accel(cfg, &target, &host, Some(&front), yielding);
        let (a_host, y_host_next) = host_policy.step(&host, &target, &front);

        let (host_next, a_host) = integrate(&host, a_host, cfg.dt);
        let (target_next, a_target) = integrate(&target, a_target, cfg.dt);
        let (front_next, a_front) = integrate(&front, 0.0, cfg.dt);

        for (role, s, a) in [(HOST, &host, a_host), (TARGET, &target, a_target), (FRONT, &front, a_front)] {
            points[role].push(TrajectoryPoint::new(t, s.x, s.y, s.v, a));
        }
        host = VehicleState { y: y_host_next, ..host_next };
        target = target_next;
        front = front_next;
    }

    let trajectories = points
        .into_iter()
        .map(|pts| Trajectory::new(pts, cfg.dt, len, cfg.vehicle_width))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut episode = Episode::from_trajectories(0, trajectories)?;
    episode.yield_param = Some(yield_param);
    episode.yield_onset = yield_onset;
    if episode.outcome != MergeOutcome::MergedAhead {
        episode.merge_success_time = None;
    }
    Ok(episode)
}

/// Samples futures of the target from the simulator's own stochastic
/// policy, conditioned on the host's ground-truth future and the latent
/// yield state of the sample.
pub fn rollout_target_futures(sample: &SceneSample, cfg: &ScenarioConfig, n: usize, seed: u64) -> Result<Vec<Trajectory>> {
    let latent = sample.latent.ok_or(DatagenError::MissingLatent(sample.sample_id))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ sample.sample_id.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let target_hist = sample.target_history();
    let start = VehicleState::from_point(target_hist.last());
    let front_start = sample.front_history().map(|f| VehicleState::from_point(f.last()));
    let host_future = sample.future_host.points();
    let dt = target_hist.dt();

    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut target = start;
        let mut front = front_start;
        let mut yielding = latent.yielding;
        let mut pts = Vec::with_capacity(host_future.len());
        for hp in host_future {
            let host = VehicleState::from_point(hp);
            if !yielding {
                let p = yield_switch_probability(cfg, latent.yield_param, &target, &host);
                if p > 0.0 && (p >= 1.0 || rng.gen::<f64>() < p) {
                    yielding = true;
                }
            }
            let a = target_accel(cfg, &target, &host, front.as_ref(), yielding);
            let (next, a) = integrate(&target, a, dt);
            pts.push(TrajectoryPoint::new(hp.t, target.x, target.y, target.v, a));
            target = next;
            front = front.map(|f| integrate(&f, 0.0, dt).0);
        }
        out.push(Trajectory::new(pts, dt, target_hist.length(), target_hist.width())?);
    }
    Ok(out)
}
