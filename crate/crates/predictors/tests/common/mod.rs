#![allow(dead_code)]

use reactbench_core::datagen::{simulate_episode, window_samples, ScenarioConfig};
use reactbench_core::protogen::PrototypeConfig;
use reactbench_core::SceneSample;

/// Windowed samples of `episodes` simulated episodes starting at `seed`.
pub fn samples(seed: u64, episodes: u64) -> Vec<SceneSample> {
    let cfg = ScenarioConfig::default();
    let pc = PrototypeConfig::default();
    (seed..seed + episodes)
        .flat_map(|s| {
            let mut ep = simulate_episode(&cfg, s).unwrap();
            ep.id = s;
            window_samples(&ep, &cfg, &pc).unwrap()
        })
        .collect()
}

pub fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1.0)
}
