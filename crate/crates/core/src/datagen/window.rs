use super::{DatagenError, Episode, MergeOutcome, Result, ScenarioConfig};
use crate::protogen::{generate_prototypes, label_ground_truth, PrototypeConfig};
use crate::types::{LatentState, PatternId, SceneContext, SceneSample, Situation, HOST, TARGET, TIME_TOL};

/// Samples per episode id block; sample ids are `episode_id * SAMPLE_ID_BLOCK + k`.
pub(crate) const SAMPLE_ID_BLOCK: u64 = 10_000;

/// Cuts an episode into overlapping windows of `t_hist` history and `t_h`
/// future, spaced by `stride`, keeping only windows that start before the
/// merge completes. Each sample is labeled with its nearest prototype.
pub fn window_samples(episode: &Episode, cfg: &ScenarioConfig, protos: &PrototypeConfig) -> Result<Vec<SceneSample>> {
    cfg.validate()?;
    let n = episode.trajectories[0].len();
    let h = cfg.steps(cfg.t_hist);
    let f = cfg.steps(cfg.t_h);
    let stride = cfg.steps(cfg.stride);
    if h + f > n - 1 {
        return Err(DatagenError::EpisodeTooShort { duration: episode.duration(), needed: cfg.t_hist + cfg.t_h });
    }
    let situation = match episode.outcome {
        MergeOutcome::MergedAhead => Situation::HostFirst,
        MergeOutcome::MergedBehind | MergeOutcome::Unresolved => Situation::TargetFirst,
    };
    let context = SceneContext { speed_limit: cfg.speed_limit, ramp_end_x: cfg.ramp_end_x };

    let mut out = Vec::new();
    let mut s = 0;
    while s + h + f < n {
        let now_idx = s + h;
        let t_now = episode.trajectories[TARGET].points()[now_idx].t;
        if episode.merge_completion_time.is_some_and(|tc| t_now >= tc - TIME_TOL) {
            break;
        }
        let history = episode
            .trajectories
            .iter()
            .map(|tr| tr.slice(s, now_idx))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let latent = episode.yield_param.map(|yp| LatentState {
            yield_param: yp,
            yielding: episode.yield_onset.is_some_and(|o| o <= t_now + TIME_TOL),
        });
        let mut sample = SceneSample {
            sample_id: episode.id * SAMPLE_ID_BLOCK + out.len() as u64,
            episode_id: episode.id,
            history,
            future_host: episode.trajectories[HOST].slice(now_idx, now_idx + f)?,
            future_predicted: episode.trajectories[TARGET].slice(now_idx, now_idx + f)?,
            gt_pattern: PatternId(1),
            horizon: cfg.t_h,
            context,
            situation,
            latent,
        };
        let set = generate_prototypes(&sample, protos)?;
        sample.gt_pattern = label_ground_truth(&sample, &set);
        out.push(sample);
        s += stride;
    }
    Ok(out)
}
