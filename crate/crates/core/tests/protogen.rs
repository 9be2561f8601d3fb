#![allow(clippy::needless_range_loop)]

use proptest::prelude::*;
use reactbench_core::datagen::{simulate_episode, window_samples, ScenarioConfig};
use reactbench_core::protogen::{
    generate_from_state, generate_prototypes, label_ground_truth, label_trajectory, FrontObstacle, InfeasibleReason, PlanRequest,
    PrototypeConfig, PrototypeStatus,
};
use reactbench_core::types::{MotionPattern, PatternId, PatternLabel, PatternSet};

fn request(v: f64, a: f64, front: Option<FrontObstacle>) -> PlanRequest {
    PlanRequest { sample_id: 0, t0: 0.0, x: 0.0, y: 0.0, v, a, length: 4.5, width: 1.8, dt: 0.1, horizon: 3.0, front }
}

/// Dense Gaussian elimination with partial pivoting.
fn solve(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        m.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| m[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / m[row][row];
    }
    x
}

/// Row of d^order/dt^order of [1, t, .., t^5].
fn basis(t: f64, order: usize) -> Vec<f64> {
    (0..6)
        .map(|i| {
            if i < order {
                return 0.0;
            }
            let coef: f64 = (0..order).map(|k| (i - k) as f64).product();
            coef * t.powi((i - order) as i32)
        })
        .collect()
}

#[test]
fn half_speed_prototype_matches_boundary_value_oracle() {
    let t_h = 3.0;
    let patterns = PatternSet::new(vec![
        MotionPattern { id: PatternId(1), label: PatternLabel::HardYield, terminal_speed_factor: 0.3, terminal_gap_target: 0.0 },
        MotionPattern { id: PatternId(2), label: PatternLabel::Yield, terminal_speed_factor: 0.5, terminal_gap_target: 0.6 },
        MotionPattern { id: PatternId(3), label: PatternLabel::KeepGap, terminal_speed_factor: 1.0, terminal_gap_target: 1.2 },
        MotionPattern { id: PatternId(4), label: PatternLabel::CloseGap, terminal_speed_factor: 1.2, terminal_gap_target: 1.8 },
    ])
    .unwrap();
    let cfg = PrototypeConfig { patterns, ..PrototypeConfig::default() };
    let set = generate_from_state(&request(10.0, 0.0, None), &cfg).unwrap();
    assert_eq!(set.status(PatternId(2)), PrototypeStatus::Exact);

    let rows = vec![basis(0.0, 0), basis(0.0, 1), basis(0.0, 2), basis(t_h, 1), basis(t_h, 2), basis(t_h, 3)];
    let c = solve(rows, vec![0.0, 10.0, 0.0, 5.0, 0.0, 0.0]);
    let v = |t: f64| basis(t, 1).iter().zip(&c).map(|(b, c)| b * c).sum::<f64>();

    let n = 3000;
    let h = t_h / n as f64;
    let integral = (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            w * v(i as f64 * h)
        })
        .sum::<f64>()
        * h
        / 3.0;

    let proto = set.get(PatternId(2));
    assert!((proto.last().x - integral).abs() < 1e-6, "{} vs {}", proto.last().x, integral);
    for p in proto.points() {
        assert!((p.v - v(p.t)).abs() < 1e-9);
    }
    assert!((proto.last().v - 5.0).abs() < 1e-6);
    assert!(proto.last().a.abs() < 1e-6);
}

#[test]
fn ground_truth_label_matches_brute_force_distances() {
    let cfg = ScenarioConfig::default();
    let pc = PrototypeConfig::default();
    let mut episode = simulate_episode(&cfg, 42).unwrap();
    episode.id = 42;
    let samples = window_samples(&episode, &cfg, &pc).unwrap();
    let yielding: Vec<_> = samples.iter().filter(|s| s.latent.is_some_and(|l| l.yielding)).collect();
    let chosen = if yielding.is_empty() { samples.iter().collect() } else { yielding };
    for sample in chosen {
        let set = generate_prototypes(sample, &pc).unwrap();
        let dists: Vec<f64> = set
            .trajectories()
            .iter()
            .map(|proto| {
                let fut = sample.future_predicted.points();
                let ss: f64 = fut.iter().zip(proto.points()).map(|(a, b)| (a.x - b.x) * (a.x - b.x)).sum();
                (ss / fut.len() as f64).sqrt()
            })
            .collect();
        let mut best = 0;
        for j in 1..dists.len() {
            if dists[j] < dists[best] {
                best = j;
            }
        }
        assert_eq!(label_ground_truth(sample, &set), PatternId(best + 1));
        assert_eq!(sample.gt_pattern, PatternId(best + 1));
    }
}

#[test]
fn label_tie_goes_to_lower_id() {
    let keep = |id| MotionPattern { id: PatternId(id), label: PatternLabel::KeepGap, terminal_speed_factor: 1.0, terminal_gap_target: 0.0 };
    let patterns = PatternSet::new(vec![
        MotionPattern { id: PatternId(1), label: PatternLabel::Yield, terminal_speed_factor: 0.5, terminal_gap_target: 0.0 },
        keep(2),
        keep(3),
    ])
    .unwrap();
    let cfg = PrototypeConfig { patterns, ..PrototypeConfig::default() };
    let set = generate_from_state(&request(10.0, 0.0, None), &cfg).unwrap();
    assert_eq!(label_trajectory(set.get(PatternId(1)), &set), PatternId(1));
    assert_eq!(set.get(PatternId(2)), set.get(PatternId(3)));
    assert_eq!(label_trajectory(set.get(PatternId(3)), &set), PatternId(2));
}

/// A state the planner can serve: the front vehicle is far enough ahead to
/// brake behind it with the hardest profile.
fn admissible_state() -> impl Strategy<Value = (f64, f64, Option<FrontObstacle>)> {
    (0.0f64..30.0, -3.0f64..2.0, prop::option::of((0.0f64..40.0, 0.0f64..30.0))).prop_map(|(v, a, front)| {
        let front = front.map(|(extra, vf)| {
            let gap0 = 2.0 + 0.5 * v + v * v / 10.0 + extra;
            FrontObstacle { rear_x: 2.25 + gap0, v: vf }
        });
        (v, a, front)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn prototypes_are_feasible_and_ordered((v, a, front) in admissible_state()) {
        let cfg = PrototypeConfig::default();
        let req = request(v, a, front);
        let set = generate_from_state(&req, &cfg).unwrap();
        prop_assert_eq!(set.len(), 4);
        for (j, tr) in set.trajectories().iter().enumerate() {
            prop_assert_eq!(tr.len(), 31);
            for p in tr.points() {
                prop_assert!(cfg.limits.admits(p), "pattern {} point {:?}", j + 1, p);
            }
            let label = cfg.patterns.get(PatternId::from_index(j)).unwrap().label;
            if let (true, Some(f)) = (label.is_yielding(), front) {
                prop_assert_ne!(set.status(PatternId::from_index(j)), PrototypeStatus::Infeasible(InfeasibleReason::Collision));
                for (k, p) in tr.points().iter().enumerate() {
                    let gap = f.rear_at(k as f64 * 0.1) - (p.x + 2.25);
                    prop_assert!(gap >= 1.0 - 1e-9, "pattern {} gap {} at step {}", j + 1, gap, k);
                }
            }
        }
        let ends: Vec<f64> = set.trajectories().iter().map(|t| t.last().x).collect();
        for w in ends.windows(2) {
            prop_assert!(w[0] <= w[1] + 1e-9, "terminal positions {:?}", ends);
        }
        for (j, st) in set.statuses().iter().enumerate() {
            let tr = &set.trajectories()[j];
            prop_assert!((tr.first().x - req.x).abs() < 1e-6 && (tr.first().v - v).abs() < 1e-6);
            if *st == PrototypeStatus::Exact && !set.is_degenerate() {
                prop_assert!((tr.first().a - a).abs() < 1e-6);
                prop_assert!(tr.last().a.abs() < 1e-6);
            }
        }
    }
}
