//! On-disk dataset archive: `config.json`, `manifest.json` and one CSV per
//! episode under `episodes/`.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use reactbench_core::datagen::{
    ingest_csv, simulate_episode, split_episode_ids, window_samples, write_episode_csv, Episode, MergeOutcome, RoleMap,
};
use reactbench_core::SceneSample;

use crate::config::{BenchConfig, TOOL_VERSION};
use crate::error::{BenchError, Result};

pub const MANIFEST_FORMAT: &str = "reactbench-dataset";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeEntry {
    pub id: u64,
    pub file: String,
    pub yield_param: Option<f64>,
    pub yield_onset: Option<f64>,
    pub outcome: MergeOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub tool_version: String,
    pub config_hash: String,
    pub dt: f64,
    pub speed_limit: f64,
    pub roles: RoleMap,
    pub episodes: Vec<EpisodeEntry>,
    pub train_episodes: Vec<u64>,
    pub test_episodes: Vec<u64>,
}

/// Simulator seed of episode `i`.
pub fn episode_seed(master: u64, i: u64) -> u64 {
    master.wrapping_mul(1_000_003).wrapping_add(i)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| BenchError::json(path.display(), e))?;
    fs::write(path, text + "\n").map_err(|e| BenchError::io(path.display(), e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| BenchError::io(path.display(), e))?;
    serde_json::from_str(&text).map_err(|e| BenchError::json(path.display(), e))
}

/// Simulates `config.episodes` episodes and writes the archive to `out`.
pub fn generate(config: &BenchConfig, out: &Path) -> Result<Manifest> {
    config.validate()?;
    let seed = config.scenario.seed;
    let episodes: Vec<Episode> = (0..config.episodes as u64)
        .into_par_iter()
        .map(|i| {
            let mut ep = simulate_episode(&config.scenario, episode_seed(seed, i))?;
            ep.id = i;
            Ok(ep)
        })
        .collect::<Result<_>>()?;
    let ids: Vec<u64> = episodes.iter().map(|e| e.id).collect();
    let (train_episodes, test_episodes) = split_episode_ids(&ids, config.train_fraction, seed)?;

    let dir = out.join("episodes");
    fs::create_dir_all(&dir).map_err(|e| BenchError::io(dir.display(), e))?;
    let mut entries = Vec::with_capacity(episodes.len());
    for ep in &episodes {
        let file = format!("episodes/episode_{:05}.csv", ep.id);
        let path = out.join(&file);
        let f = fs::File::create(&path).map_err(|e| BenchError::io(path.display(), e))?;
        write_episode_csv(ep, BufWriter::new(f))?;
        entries.push(EpisodeEntry {
            id: ep.id,
            file,
            yield_param: ep.yield_param,
            yield_onset: ep.yield_onset,
            outcome: ep.outcome,
        });
    }
    let manifest = Manifest {
        format: MANIFEST_FORMAT.into(),
        tool_version: TOOL_VERSION.into(),
        config_hash: config.hash(),
        dt: config.scenario.dt,
        speed_limit: config.scenario.speed_limit,
        roles: RoleMap { host: 0, target: 1, front: Some(2) },
        episodes: entries,
        train_episodes,
        test_episodes,
    };
    write_json(&out.join("config.json"), config)?;
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub config: BenchConfig,
    pub manifest: Manifest,
    pub episodes: Vec<Episode>,
}

impl Dataset {
    pub fn load(root: &Path) -> Result<Self> {
        let config: BenchConfig = read_json(&root.join("config.json"))?;
        config.validate()?;
        let manifest: Manifest = read_json(&root.join("manifest.json"))?;
        if manifest.format != MANIFEST_FORMAT {
            return Err(BenchError::Config(format!("{} is not a dataset manifest", root.display())));
        }
        if manifest.config_hash != config.hash() {
            return Err(BenchError::Config("dataset config does not match its manifest hash".into()));
        }
        let episodes = manifest
            .episodes
            .par_iter()
            .map(|entry| {
                let path = root.join(&entry.file);
                let f = fs::File::open(&path).map_err(|e| BenchError::io(path.display(), e))?;
                let mut ep = ingest_csv(std::io::BufReader::new(f), manifest.dt, Some(&manifest.roles))?;
                ep.id = entry.id;
                ep.yield_param = entry.yield_param;
                ep.yield_onset = entry.yield_onset;
                Ok(ep)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { root: root.to_path_buf(), config, manifest, episodes })
    }

    fn samples_of(&self, ids: &[u64]) -> Result<Vec<SceneSample>> {
        let chunks = self
            .episodes
            .par_iter()
            .filter(|ep| ids.binary_search(&ep.id).is_ok())
            .map(|ep| Ok(window_samples(ep, &self.config.scenario, &self.config.prototypes)?))
            .collect::<Result<Vec<Vec<SceneSample>>>>()?;
        Ok(chunks.into_iter().flatten().collect())
    }

    pub fn train_samples(&self) -> Result<Vec<SceneSample>> {
        self.samples_of(&self.manifest.train_episodes)
    }

    pub fn test_samples(&self) -> Result<Vec<SceneSample>> {
        self.samples_of(&self.manifest.test_episodes)
    }
}
