use std::collections::BTreeSet;

use reactbench_core::datagen::{
    ingest_csv, simulate_episode, split, split_episode_ids, window_samples, write_episode_csv, DatagenError, Episode,
    MergeOutcome, RoleMap, ScenarioConfig,
};
use reactbench_core::protogen::PrototypeConfig;
use reactbench_core::types::{Trajectory, TrajectoryPoint};

fn overlap_index(ep: &Episode) -> Option<usize> {
    let (h, t) = (&ep.trajectories[0], &ep.trajectories[1]);
    let half = 0.5 * (h.width() + t.width());
    (0..h.len()).find(|&i| (h.points()[i].y - t.points()[i].y).abs() < half)
}

#[test]
fn always_yielding_target_lets_host_merge_ahead() {
    let cfg = ScenarioConfig { yield_param_range: [1.0, 1.0], ..ScenarioConfig::default() };
    for seed in 0..30 {
        let ep = simulate_episode(&cfg, seed).unwrap();
        assert!(ep.merge_success_time.is_some(), "seed {seed}");
        assert_eq!(ep.outcome, MergeOutcome::MergedAhead);
        let i = overlap_index(&ep).unwrap();
        let gap = ep.trajectories[0].rear(i) - ep.trajectories[1].front(i);
        assert!(gap >= cfg.idm.desired_gap / 2.0, "seed {seed}: gap {gap}");
    }
}

#[test]
fn never_yielding_target_on_short_ramp_forces_abort() {
    let cfg = ScenarioConfig { yield_param_range: [0.0, 0.0], ramp_end_x: 130.0, ..ScenarioConfig::default() };
    for seed in 0..30 {
        let ep = simulate_episode(&cfg, seed).unwrap();
        assert_eq!(ep.merge_success_time, None, "seed {seed}");
        assert_ne!(ep.outcome, MergeOutcome::MergedAhead);
        let host = &ep.trajectories[0];
        let target = &ep.trajectories[1];
        let abort = host.points().iter().position(|p| p.x + 0.5 * host.length() >= cfg.ramp_end_x - cfg.abort_margin);
        let abort = abort.expect("host reaches the abort zone");
        assert!(host.points()[abort..].iter().any(|p| p.a < -cfg.idm.comfortable_decel));
        if let Some(i) = overlap_index(&ep) {
            assert!(host.front(i) < target.rear(i));
        }
    }
}

#[test]
fn simulation_is_deterministic_and_within_limits() {
    let cfg = ScenarioConfig::default();
    for seed in 0..100 {
        let a = simulate_episode(&cfg, seed).unwrap();
        assert_eq!(a, simulate_episode(&cfg, seed).unwrap());
        for tr in &a.trajectories {
            assert!(tr.points().windows(2).all(|w| w[1].t > w[0].t));
            assert!(tr.is_kinematically_consistent(2.0 * cfg.idm.comfortable_decel));
            for p in tr.points() {
                assert!(p.a >= -2.0 * cfg.idm.comfortable_decel - 1e-12 && p.a <= cfg.idm.max_accel + 1e-12);
            }
        }
    }
}

#[test]
fn windows_stop_at_merge_completion() {
    let cfg = ScenarioConfig::default();
    let pc = PrototypeConfig::default();
    let mut seen_early_merge = false;
    for seed in 0..40 {
        let mut ep = simulate_episode(&cfg, seed).unwrap();
        ep.id = seed;
        let samples = window_samples(&ep, &cfg, &pc).unwrap();
        let cutoff = ep.merge_completion_time.unwrap_or(f64::INFINITY);
        let mut expected = 0;
        let mut t_now = cfg.t_hist;
        while t_now + cfg.t_h <= ep.duration() + 1e-9 && t_now < cutoff - 1e-9 {
            expected += 1;
            t_now += cfg.stride;
        }
        assert_eq!(samples.len(), expected, "seed {seed}");
        for s in &samples {
            assert!(s.now() < cutoff);
            assert!(s.history[0].start_time() < cutoff - cfg.t_hist);
        }
        seen_early_merge |= cutoff < 6.0;
    }
    assert!(seen_early_merge);
}

fn straight(y: f64, x0: f64, secs: f64) -> Trajectory {
    let pts = (0..=(secs * 10.0).round() as usize)
        .map(|k| {
            let t = k as f64 * 0.1;
            TrajectoryPoint::new(t, x0 + 10.0 * t, y, 10.0, 0.0)
        })
        .collect();
    Trajectory::new(pts, 0.1, 4.5, 1.8).unwrap()
}

#[test]
fn thirty_second_unmerged_episode_gives_51_samples() {
    let ep = Episode::from_trajectories(3, vec![straight(3.6, 0.0, 30.0), straight(0.0, 10.0, 30.0)]).unwrap();
    assert_eq!(ep.outcome, MergeOutcome::Unresolved);
    let samples = window_samples(&ep, &ScenarioConfig::default(), &PrototypeConfig::default()).unwrap();
    assert_eq!(samples.len(), ((30.0 - 5.0) / 0.5) as usize + 1);
}

#[test]
fn short_episode_is_rejected() {
    let ep = Episode::from_trajectories(0, vec![straight(3.6, 0.0, 4.9), straight(0.0, 10.0, 4.9)]).unwrap();
    assert!(matches!(
        window_samples(&ep, &ScenarioConfig::default(), &PrototypeConfig::default()),
        Err(DatagenError::EpisodeTooShort { .. })
    ));
}

#[test]
fn csv_round_trip_reproduces_positions() {
    let cfg = ScenarioConfig::default();
    for seed in [0, 9, 21] {
        let ep = simulate_episode(&cfg, seed).unwrap();
        let mut buf = Vec::new();
        write_episode_csv(&ep, &mut buf).unwrap();
        let back = ingest_csv(buf.as_slice(), cfg.dt, None).unwrap();
        assert_eq!(back.trajectories.len(), 3);
        for (a, b) in ep.trajectories.iter().zip(&back.trajectories) {
            assert_eq!(a.len(), b.len());
            for (p, q) in a.points().iter().zip(b.points()) {
                assert!((p.x - q.x).abs() < 1e-6 && (p.y - q.y).abs() < 1e-6);
            }
        }
        assert_eq!(back.outcome, ep.outcome);
        assert_eq!(back.merge_completion_time, ep.merge_completion_time);
    }
}

#[test]
fn role_map_reorders_vehicles() {
    let ep = simulate_episode(&ScenarioConfig::default(), 4).unwrap();
    let mut buf = Vec::new();
    write_episode_csv(&ep, &mut buf).unwrap();
    let roles = RoleMap { host: 1, target: 0, front: None };
    let back = ingest_csv(buf.as_slice(), 0.1, Some(&roles)).unwrap();
    assert_eq!(back.trajectories.len(), 2);
    assert_eq!(back.trajectories[0].points()[0].x, ep.trajectories[1].points()[0].x);
}

#[test]
fn split_is_episode_level() {
    let cfg = ScenarioConfig::default();
    let pc = PrototypeConfig::default();
    let mut samples = Vec::new();
    for seed in 0..10 {
        let mut ep = simulate_episode(&cfg, seed).unwrap();
        ep.id = seed;
        samples.extend(window_samples(&ep, &cfg, &pc).unwrap());
    }
    let (train, test) = split(samples.clone(), 0.9, 5).unwrap();
    let tr: BTreeSet<u64> = train.iter().map(|s| s.episode_id).collect();
    let te: BTreeSet<u64> = test.iter().map(|s| s.episode_id).collect();
    assert_eq!((tr.len(), te.len()), (9, 1));
    assert!(tr.is_disjoint(&te));
    assert_eq!(train.len() + test.len(), samples.len());
    let (train2, test2) = split(samples, 0.9, 5).unwrap();
    assert_eq!((train, test), (train2, test2));
    assert!(matches!(split_episode_ids(&[7, 7, 7], 0.5, 1), Err(DatagenError::TooFewEpisodes { .. })));
}
