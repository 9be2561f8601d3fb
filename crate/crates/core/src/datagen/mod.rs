//! Merge-interaction data: a synthetic two-vehicle longitudinal simulator,
//! trajectory CSV ingestion, windowing into scene samples and
//! episode-level train/test splitting.

mod csv_io;
mod sim;
mod split;
mod window;

pub use csv_io::{ingest_csv, write_episode_csv, RoleMap, CSV_HEADER, FEET_TO_METERS, MAX_PLAUSIBLE_SPEED};
pub use sim::{rollout_target_futures, simulate_episode, target_accel, yield_switch_probability, VehicleState};
pub use split::{split, split_episode_ids};
pub use window::window_samples;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::CoreError;
use crate::types::{Trajectory, HOST, TARGET};

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error("invalid scenario config: {0}")]
    ConfigInvalid(String),

    #[error("episode of {duration:.2} s is shorter than the {needed:.2} s window")]
    EpisodeTooShort { duration: f64, needed: f64 },

    #[error("parse error at line {line}, column `{column}`: {message}")]
    Parse { line: u64, column: String, message: String },

    #[error("speed {speed:.1} m/s at line {line} is implausible; check the unit column")]
    Unit { line: u64, speed: f64 },

    #[error("split leaves no episodes on one side ({episodes} episodes, train fraction {fraction})")]
    TooFewEpisodes { episodes: usize, fraction: f64 },

    #[error("sample {0} has no simulator latent state")]
    MissingLatent(u64),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = DatagenError> = std::result::Result<T, E>;

/// Intelligent-driver-model parameters shared by all simulated vehicles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdmParams {
    /// Standstill bumper gap (m).
    pub desired_gap: f64,
    pub time_headway: f64,
    pub max_accel: f64,
    pub comfortable_decel: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self { desired_gap: 2.0, time_headway: 1.2, max_accel: 1.5, comfortable_decel: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub speed_limit: f64,
    pub ramp_end_x: f64,
    pub dt: f64,
    pub t_hist: f64,
    pub t_h: f64,
    pub idm: IdmParams,
    pub yield_param_range: [f64; 2],
    pub seed: u64,
    pub episode_duration: f64,
    pub lane_width: f64,
    pub vehicle_length: f64,
    pub vehicle_width: f64,
    /// Distance before the ramp end at which an unfinished merge is aborted (m).
    pub abort_margin: f64,
    /// Spacing between consecutive sample windows (s).
    pub stride: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            speed_limit: 15.0,
            ramp_end_x: 200.0,
            dt: 0.1,
            t_hist: 2.0,
            t_h: 3.0,
            idm: IdmParams::default(),
            yield_param_range: [0.0, 1.0],
            seed: 1,
            episode_duration: 20.0,
            lane_width: 3.6,
            vehicle_length: 4.5,
            vehicle_width: 1.8,
            abort_margin: 30.0,
            stride: 0.5,
        }
    }
}

fn is_multiple(value: f64, step: f64) -> bool {
    let r = value / step;
    (r - r.round()).abs() < 1e-9
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("speed_limit", self.speed_limit),
            ("ramp_end_x", self.ramp_end_x),
            ("dt", self.dt),
            ("t_hist", self.t_hist),
            ("t_h", self.t_h),
            ("idm.desired_gap", self.idm.desired_gap),
            ("idm.time_headway", self.idm.time_headway),
            ("idm.max_accel", self.idm.max_accel),
            ("idm.comfortable_decel", self.idm.comfortable_decel),
            ("episode_duration", self.episode_duration),
            ("lane_width", self.lane_width),
            ("vehicle_length", self.vehicle_length),
            ("vehicle_width", self.vehicle_width),
            ("abort_margin", self.abort_margin),
            ("stride", self.stride),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(DatagenError::ConfigInvalid(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("t_hist", self.t_hist), ("t_h", self.t_h), ("stride", self.stride)] {
            if !is_multiple(v, self.dt) {
                return Err(DatagenError::ConfigInvalid(format!("{name} = {v} is not a multiple of dt = {}", self.dt)));
            }
        }
        let [lo, hi] = self.yield_param_range;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(DatagenError::ConfigInvalid(format!("yield_param_range {lo}..{hi} not within [0, 1]")));
        }
        if self.lane_width <= self.vehicle_width {
            return Err(DatagenError::ConfigInvalid("lane narrower than a vehicle".into()));
        }
        Ok(())
    }

    pub(crate) fn steps(&self, seconds: f64) -> usize {
        (seconds / self.dt).round() as usize
    }
}

/// How an episode's merge interaction ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MergeOutcome {
    MergedAhead,
    MergedBehind,
    Unresolved,
}

/// Lateral distance to the target's path below which a merge is complete (m).
pub const COMPLETION_TOL: f64 = 0.2;

/// One continuous recording of the interacting vehicles on a shared time base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub id: u64,
    /// Role-indexed: host, target, then the front vehicle when present.
    pub trajectories: Vec<Trajectory>,
    pub yield_param: Option<f64>,
    /// Time at which the simulated target switched to yielding.
    pub yield_onset: Option<f64>,
    pub merge_success_time: Option<f64>,
    pub merge_completion_time: Option<f64>,
    pub outcome: MergeOutcome,
}

impl Episode {
    /// Builds an episode from role-ordered trajectories, deriving the merge
    /// outcome geometrically.
    pub fn from_trajectories(id: u64, trajectories: Vec<Trajectory>) -> Result<Self> {
        if trajectories.len() < 2 {
            return Err(DatagenError::ConfigInvalid("an episode needs host and target trajectories".into()));
        }
        let n = trajectories[0].len();
        let dt = trajectories[0].dt();
        let t0 = trajectories[0].start_time();
        for tr in &trajectories {
            if tr.len() != n || (tr.dt() - dt).abs() > 1e-12 || (tr.start_time() - t0).abs() > 1e-9 {
                return Err(DatagenError::ConfigInvalid("episode trajectories must share a time base".into()));
            }
        }
        let (completion, outcome) = merge_completion(&trajectories[HOST], &trajectories[TARGET]);
        Ok(Self {
            id,
            trajectories,
            yield_param: None,
            yield_onset: None,
            merge_success_time: (outcome == MergeOutcome::MergedAhead).then_some(completion).flatten(),
            merge_completion_time: completion,
            outcome,
        })
    }

    pub fn duration(&self) -> f64 {
        self.trajectories[0].duration()
    }

    pub fn dt(&self) -> f64 {
        self.trajectories[0].dt()
    }
}

/// First time the host is laterally on the target's path, and on which side.
pub fn merge_completion(host: &Trajectory, target: &Trajectory) -> (Option<f64>, MergeOutcome) {
    for (h, t) in host.points().iter().zip(target.points()) {
        if (h.y - t.y).abs() <= COMPLETION_TOL {
            let outcome = if h.x > t.x { MergeOutcome::MergedAhead } else { MergeOutcome::MergedBehind };
            return (Some(h.t), outcome);
        }
    }
    (None, MergeOutcome::Unresolved)
}
