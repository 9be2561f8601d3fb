mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use reactbench_core::protogen::{generate_prototypes, PrototypeConfig};
use reactbench_core::{SceneSample, Trajectory, TrajectoryPoint};
use reactbench_predictors::irl::{irl_loglik_grad, raw_features, softmax_neg, train_theta, Demo, FeatureConfig};
use reactbench_predictors::{IrlModel, IrlTrainConfig, Predictor};

fn random_demos(rng: &mut ChaCha8Rng, n: usize, k: usize, d: usize) -> Vec<Demo> {
    (0..n)
        .map(|_| Demo {
            candidates: (0..k).map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect(),
            chosen: rng.gen_range(0..k),
        })
        .collect()
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..10 {
        let demos = random_demos(&mut rng, 3, 5, 5);
        let theta: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let (_, g) = irl_loglik_grad(&theta, &demos).unwrap();
        for i in 0..5 {
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[i] += 1e-6;
            tm[i] -= 1e-6;
            let fd = (irl_loglik_grad(&tp, &demos).unwrap().0 - irl_loglik_grad(&tm, &demos).unwrap().0) / 2e-6;
            assert!(common::rel_err(g[i], fd) < 1e-6, "{} vs {fd}", g[i]);
        }
    }
}

#[test]
fn separable_demonstrations_are_learned() {
    let demos: Vec<Demo> = (0..5)
        .map(|_| Demo { candidates: vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]], chosen: 0 })
        .collect();
    let (theta, trace) = train_theta(&demos, 2, &IrlTrainConfig::default()).unwrap();
    for w in trace.windows(2) {
        assert!(w[1] >= w[0]);
    }
    let costs: Vec<f64> = demos[0].candidates.iter().map(|f| f[0] * theta[0] + f[1] * theta[1]).collect();
    assert!(softmax_neg(&costs)[0] >= 0.9);
}

#[test]
fn zero_learning_rate_and_determinism() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let demos = random_demos(&mut rng, 6, 4, 5);
    let zero = IrlTrainConfig { lr: 0.0, iters: 50, seed: 9 };
    let (t0, _) = train_theta(&demos, 5, &zero).unwrap();
    let (init, _) = train_theta(&demos, 5, &IrlTrainConfig { iters: 0, ..zero }).unwrap();
    assert_eq!(t0, init);
    let cfg = IrlTrainConfig { seed: 9, ..IrlTrainConfig::default() };
    assert_eq!(train_theta(&demos, 5, &cfg).unwrap(), train_theta(&demos, 5, &cfg).unwrap());
}

fn sample_with_host(host_x0: f64, host_v: f64) -> SceneSample {
    let mut s = common::samples(42, 1).remove(0);
    let n = s.future_host.len();
    let pts = (0..n)
        .map(|k| {
            let t = s.now() + k as f64 * 0.1;
            TrajectoryPoint::new(t, host_x0 + host_v * k as f64 * 0.1, 3.6, host_v, 0.0)
        })
        .collect();
    s.future_host = Trajectory::new(pts, 0.1, 4.5, 1.8).unwrap();
    s
}

fn constant(x0: f64, v: f64, n: usize, t0: f64) -> Trajectory {
    let pts = (0..n).map(|k| TrajectoryPoint::new(t0 + k as f64 * 0.1, x0 + v * k as f64 * 0.1, 0.0, v, 0.0)).collect();
    Trajectory::new(pts, 0.1, 4.5, 1.8).unwrap()
}

#[test]
fn closed_form_features() {
    let s = sample_with_host(1000.0, 10.0);
    let n = s.future_host.len();
    let cfg = FeatureConfig { gap_scale: 5.0, desired_speed: Some(10.0) };
    let f = raw_features(&constant(0.0, 10.0, n, s.now()), &s, &cfg);
    assert_eq!(&f[..3], &[0.0, 0.0, 0.0]);
    assert!(f[3] < 1e-80);
    assert!((f[4] - (1000.0 - 4.5)).abs() < 1e-9);

    let f = raw_features(&constant(0.0, 0.0, n, s.now()), &s, &cfg);
    assert!((f[2] - 100.0).abs() < 1e-12);
}

/// Features recomputed by piecewise-linear integration of each integrand.
fn reference_features(traj: &Trajectory, s: &SceneSample, v_des: f64) -> [f64; 5] {
    let p = traj.points();
    let h = s.future_host.points();
    let n = p.len();
    let span = (n - 1) as f64 * 0.1;
    let integrate = |f: &dyn Fn(usize) -> f64| (1..n).map(|k| 0.05 * (f(k - 1) + f(k))).sum::<f64>() / span;
    let jerk: f64 = (1..n).map(|k| ((p[k].a - p[k - 1].a) / 0.1).powi(2)).sum::<f64>() / (n - 1) as f64;
    [
        integrate(&|k| p[k].a * p[k].a),
        jerk,
        integrate(&|k| (p[k].v - v_des).powi(2)),
        integrate(&|k| (-(((h[k].x - p[k].x).abs() - 4.5).max(0.0)) / 5.0).exp()),
        (h[n - 1].x - 2.25) - (p[n - 1].x + 2.25),
    ]
}

#[test]
fn seed_42_features_match_reference() {
    let cfg = FeatureConfig::default();
    for s in common::samples(42, 1).iter().step_by(3) {
        let protos = generate_prototypes(s, &PrototypeConfig::default()).unwrap();
        for traj in protos.trajectories().iter().chain(std::iter::once(&s.future_predicted)) {
            let ours = raw_features(traj, s, &cfg);
            let reference = reference_features(traj, s, s.context.speed_limit);
            for (a, b) in ours.iter().zip(&reference) {
                assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{a} vs {b}");
            }
        }
    }
}

#[test]
fn trained_model_predicts_by_direct_softmax() {
    let train = common::samples(42, 6);
    let (model, trace) =
        IrlModel::fit(&train, PrototypeConfig::default(), FeatureConfig::default(), IrlTrainConfig::default()).unwrap();
    assert!(trace.windows(2).all(|w| w[1] >= w[0]));
    let pc = PrototypeConfig::default();
    for s in common::samples(900, 1) {
        let protos = generate_prototypes(&s, &pc).unwrap();
        let costs: Vec<f64> = protos
            .trajectories()
            .iter()
            .map(|p| {
                let raw = raw_features(p, &s, &model.feature_config);
                (0..5).map(|i| model.theta[i] * (raw[i] - model.feature_mean[i]) / model.feature_std[i]).sum()
            })
            .collect();
        let e: Vec<f64> = costs.iter().map(|c| (-c).exp()).collect();
        let z: f64 = e.iter().sum();
        let p = model.predict(&s, &protos).unwrap();
        for (a, b) in p.probs().iter().zip(&e) {
            assert!((a - b / z).abs() < 1e-12);
        }
    }
}

#[test]
fn zero_theta_is_uniform() {
    let s = &common::samples(42, 1)[2];
    let protos = generate_prototypes(s, &PrototypeConfig::default()).unwrap();
    let model = IrlModel::from_parts(
        vec![0.0; 5],
        FeatureConfig::default(),
        vec![0.0; 5],
        vec![1.0; 5],
        PrototypeConfig::default(),
        IrlTrainConfig::default(),
    )
    .unwrap();
    assert_eq!(model.predict(s, &protos).unwrap().probs(), &[0.25; 4]);
}

proptest! {
    #[test]
    fn softmax_is_shift_invariant(costs in prop::collection::vec(-50.0f64..50.0, 1..8), shift in -100.0f64..100.0) {
        let a = softmax_neg(&costs);
        let b = softmax_neg(&costs.iter().map(|c| c + shift).collect::<Vec<_>>());
        prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_costs_give_equal_probabilities(c in -20.0f64..20.0, other in -20.0f64..20.0) {
        let p = softmax_neg(&[c, other, c]);
        prop_assert_eq!(p[0], p[2]);
    }
}
