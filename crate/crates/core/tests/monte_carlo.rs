use ompath_core::geometry::om_action;
use ompath_core::monte_carlo::{
    ensemble_actions, euler_maruyama, reference_path, sample_transitions, tube_probability, ReferenceMethod,
    SamplingConfig, TransitionEnsemble, TubeConfig,
};
use ompath_core::systems::make_double_well;
use ompath_core::{Matrix, OmError, SystemModel, Trajectory, Vector};

fn v(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

fn sampling(delta: f64, attempts: usize, seed: u64) -> SamplingConfig {
    SamplingConfig {
        dt: 1e-3,
        delta,
        attempts,
        seed,
        n_nodes: 101,
    }
}

fn brownian() -> SystemModel {
    SystemModel::new(
        "brownian",
        1,
        |_: &Vector| v(&[0.0]),
        |_: &Vector| Matrix::identity(1, 1),
    )
    .unwrap()
}

fn noiseless_double_well() -> SystemModel {
    SystemModel::new(
        "ode",
        1,
        |x: &Vector| v(&[x[0] - x[0].powi(3)]),
        |_: &Vector| Matrix::zeros(1, 1),
    )
    .unwrap()
}

#[test]
fn brownian_variance_matches_horizon() {
    let n = 10_000;
    let ends: Vec<f64> = (0..n)
        .map(|s| euler_maruyama(&brownian(), &v(&[0.5]), 0.0, 2.0, 0.01, s).unwrap()[200][0] - 0.5)
        .collect();
    let mean = ends.iter().sum::<f64>() / n as f64;
    let var = ends.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!((var - 2.0).abs() < 0.05 * 2.0, "{var}");
}

#[test]
fn paths_are_reproducible() {
    let s = make_double_well(1.0).unwrap();
    let a = euler_maruyama(&s, &v(&[-1.0]), 0.0, 1.0, 1e-3, 42).unwrap();
    let b = euler_maruyama(&s, &v(&[-1.0]), 0.0, 1.0, 1e-3, 42).unwrap();
    let c = euler_maruyama(&s, &v(&[-1.0]), 0.0, 1.0, 1e-3, 43).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.len(), 1001);
}

#[test]
fn noiseless_limit_is_first_order() {
    // x' = x − x³ from x0 has x(t) = x0 eᵗ / √(1 + x0²(e²ᵗ − 1)).
    let x0: f64 = 0.2;
    let e2 = (2.0f64).exp();
    let exact = x0 * 1f64.exp() / (1.0 + x0 * x0 * (e2 - 1.0)).sqrt();
    let error = |dt: f64| {
        let path = euler_maruyama(&noiseless_double_well(), &v(&[x0]), 0.0, 1.0, dt, 0).unwrap();
        (path[path.len() - 1][0] - exact).abs()
    };
    let order = (error(0.01) / error(0.005)).log2();
    assert!((order - 1.0).abs() < 0.2, "order {order}");
}

#[test]
fn rejects_indivisible_step() {
    assert!(euler_maruyama(&brownian(), &v(&[0.0]), 0.0, 1.0, 0.3, 0).is_err());
}

#[test]
fn blowup_is_reported() {
    let s = SystemModel::new(
        "explosive",
        1,
        |x: &Vector| v(&[x[0] * x[0]]),
        |_: &Vector| Matrix::zeros(1, 1),
    )
    .unwrap();
    assert!(matches!(
        euler_maruyama(&s, &v(&[10.0]), 0.0, 1.0, 0.01, 0),
        Err(OmError::NumericalBlowup { .. })
    ));
}

#[test]
fn wide_acceptance_keeps_everything() {
    let s = make_double_well(1.0).unwrap();
    let e = sample_transitions(&s, &v(&[-1.0]), &v(&[1.0]), 0.0, 1.0, &sampling(1e3, 200, 7)).unwrap();
    assert_eq!(e.acceptance_rate(), 1.0);
    assert_eq!(e.times().len(), 101);
    assert_eq!(e.trials(), (0..200).collect::<Vec<u64>>().as_slice());
}

#[test]
fn transitions_occur_at_unit_noise() {
    let s = make_double_well(1.0).unwrap();
    let e = sample_transitions(&s, &v(&[-1.0]), &v(&[1.0]), 0.0, 1.0, &sampling(0.1, 20_000, 1)).unwrap();
    assert!(e.acceptance_rate() > 0.0);
    for p in e.paths() {
        assert!((p[100][0] - 1.0).abs() <= 0.1);
        assert_eq!(p[0][0], -1.0);
    }
}

#[test]
fn weak_noise_transitions_are_rarer() {
    let rate = |sigma: f64, seed: u64| {
        let s = make_double_well(sigma).unwrap();
        match sample_transitions(&s, &v(&[-1.0]), &v(&[1.0]), 0.0, 1.0, &sampling(0.1, 5_000, seed)) {
            Ok(e) => e.acceptance_rate(),
            Err(OmError::NoTransitions { .. }) => 0.0,
            Err(e) => panic!("{e}"),
        }
    };
    let strong: Vec<f64> = (0..3).map(|s| rate(1.0, s)).collect();
    let weak: Vec<f64> = (0..3).map(|s| rate(0.1, 10 + s)).collect();
    let mean = |r: &[f64]| r.iter().sum::<f64>() / r.len() as f64;
    let band = 3.0 * (mean(&strong) * (1.0 - mean(&strong)) / (3.0 * 5_000.0)).sqrt();
    assert!(mean(&strong) - mean(&weak) > band, "{strong:?} vs {weak:?}");
}

#[test]
fn sampling_is_reproducible_and_checks_stride() {
    let s = make_double_well(1.0).unwrap();
    let a = sample_transitions(&s, &v(&[-1.0]), &v(&[1.0]), 0.0, 1.0, &sampling(0.5, 500, 3)).unwrap();
    let b = sample_transitions(&s, &v(&[-1.0]), &v(&[1.0]), 0.0, 1.0, &sampling(0.5, 500, 3)).unwrap();
    assert_eq!(a, b);
    let coarse = SamplingConfig {
        dt: 0.01,
        ..sampling(0.5, 10, 3)
    };
    assert!(matches!(
        sample_transitions(&s, &v(&[-1.0]), &v(&[1.0]), 0.0, 1.0, &coarse),
        Err(OmError::InvalidParams(_))
    ));
    assert!(sample_transitions(&s, &v(&[-1.0]), &v(&[1.0]), 0.0, 1.0, &sampling(0.0, 10, 3)).is_err());
}

#[test]
fn no_transitions_is_typed() {
    let s = make_double_well(0.05).unwrap();
    assert!(matches!(
        sample_transitions(&s, &v(&[-1.0]), &v(&[1.0]), 0.0, 1.0, &sampling(0.01, 50, 0)),
        Err(OmError::NoTransitions { attempts: 50 })
    ));
}

#[test]
fn ensemble_rechecks_endpoints() {
    let times = vec![0.0, 0.5, 1.0];
    let good = vec![v(&[-1.0]), v(&[0.0]), v(&[0.95])];
    let bad = vec![v(&[-1.0]), v(&[0.0]), v(&[0.5])];
    assert!(TransitionEnsemble::from_parts(times.clone(), vec![good.clone()], vec![0], 1, 0.1, 0, v(&[1.0])).is_ok());
    assert!(TransitionEnsemble::from_parts(times.clone(), vec![bad], vec![0], 1, 0.1, 0, v(&[1.0])).is_err());
    assert!(TransitionEnsemble::from_parts(times, vec![good.clone(), good], vec![0, 1], 1, 0.1, 0, v(&[1.0])).is_err());
}

#[test]
fn single_path_reference_is_that_path() {
    let s = make_double_well(1.0).unwrap();
    let times = vec![0.0, 0.25, 0.5, 0.75, 1.0];
    let path = vec![v(&[-1.0]), v(&[-0.6]), v(&[0.1]), v(&[0.7]), v(&[0.98])];
    let e = TransitionEnsemble::from_parts(times, vec![path.clone()], vec![4], 9, 0.1, 0, v(&[1.0])).unwrap();
    for method in [
        ReferenceMethod::PerSliceMode,
        ReferenceMethod::MinAction,
        ReferenceMethod::PerSliceMedian,
    ] {
        assert_eq!(reference_path(&e, method, &s).unwrap().states(), path.as_slice());
    }
}

#[test]
fn min_action_beats_the_mean() {
    let s = make_double_well(1.0).unwrap();
    let e = sample_transitions(&s, &v(&[-1.0]), &v(&[1.0]), 0.0, 1.0, &sampling(0.3, 5_000, 5)).unwrap();
    let best = reference_path(&e, ReferenceMethod::MinAction, &s).unwrap();
    let actions = ensemble_actions(&e, &s).unwrap();
    let mean = actions.iter().sum::<f64>() / actions.len() as f64;
    let a = om_action(&s, &best).unwrap();
    assert!(a <= mean);
    assert!(actions.iter().all(|&x| x >= a));
}

#[test]
fn tube_limits() {
    let s = make_double_well(1.0).unwrap();
    let line = Trajectory::from_fn(0.0, 1.0, 11, |t| v(&[2.0 * t - 1.0])).unwrap();
    let wide = TubeConfig {
        dt: 1e-3,
        delta: 1e3,
        trials: 200,
        seed: 0,
    };
    assert_eq!(tube_probability(&s, &line, &v(&[-1.0]), 0.0, 1.0, &wide).unwrap(), 1.0);
    let far = Trajectory::from_fn(0.0, 1.0, 11, |_| v(&[1e3])).unwrap();
    let tight = TubeConfig {
        delta: 0.3,
        ..wide.clone()
    };
    assert_eq!(tube_probability(&s, &far, &v(&[-1.0]), 0.0, 1.0, &tight).unwrap(), 0.0);
    let none = TubeConfig { trials: 0, ..wide };
    assert!(tube_probability(&s, &line, &v(&[-1.0]), 0.0, 1.0, &none).is_err());
}

#[test]
fn tube_estimate_is_reproducible() {
    let s = make_double_well(1.0).unwrap();
    let line = Trajectory::from_fn(0.0, 1.0, 11, |t| v(&[2.0 * t - 1.0])).unwrap();
    let cfg = TubeConfig {
        dt: 1e-3,
        delta: 0.5,
        trials: 2_000,
        seed: 11,
    };
    let a = tube_probability(&s, &line, &v(&[-1.0]), 0.0, 1.0, &cfg).unwrap();
    let b = tube_probability(&s, &line, &v(&[-1.0]), 0.0, 1.0, &cfg).unwrap();
    assert_eq!(a, b);
    assert!(a > 0.0 && a < 1.0, "{a}");
}
