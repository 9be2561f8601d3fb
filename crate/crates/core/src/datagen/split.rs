use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DatagenError, Result};
use crate::types::SceneSample;

/// Shuffles distinct episode ids with `seed` and returns `(train, test)` ids,
/// each sorted.
pub fn split_episode_ids(ids: &[u64], train_fraction: f64, seed: u64) -> Result<(Vec<u64>, Vec<u64>)> {
    let mut unique: Vec<u64> = ids.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let n = unique.len();
    let n_train = (train_fraction * n as f64).round() as usize;
    if !(0.0..=1.0).contains(&train_fraction) || n_train == 0 || n_train >= n {
        return Err(DatagenError::TooFewEpisodes { episodes: n, fraction: train_fraction });
    }
    unique.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut train = unique[..n_train].to_vec();
    let mut test = unique[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Episode-level split: all samples of an episode land on the same side.
pub fn split(samples: Vec<SceneSample>, train_fraction: f64, seed: u64) -> Result<(Vec<SceneSample>, Vec<SceneSample>)> {
    let ids: Vec<u64> = samples.iter().map(|s| s.episode_id).collect();
    let (train_ids, _) = split_episode_ids(&ids, train_fraction, seed)?;
    let train_ids: BTreeSet<u64> = train_ids.into_iter().collect();
    Ok(samples.into_iter().partition(|s| train_ids.contains(&s.episode_id)))
}
