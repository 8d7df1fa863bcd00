use std::sync::Arc;

use ompath_core::geometry::geometry_point;
use ompath_core::solver::forward_sweep;
use ompath_core::systems::{
    make_custom, make_double_well, make_maier_stein, make_npz, probe_points, CustomSystem, NpzParams,
};
use ompath_core::trajectory::uniform_grid;
use ompath_core::{ControlProblem, Matrix, OmError, SystemModel, Vector};

fn v(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

fn fd4_column(x: &Vector, k: usize, h: f64, f: impl Fn(&Vector) -> Matrix) -> Matrix {
    let at = |s: f64| {
        let mut y = x.clone();
        y[k] += s * h;
        f(&y)
    };
    (at(-2.0) - at(-1.0) * 8.0 + at(1.0) * 8.0 - at(2.0)) / (12.0 * h)
}

/// Max difference relative to `max(1, scale)`, so zero entries compare in
/// absolute terms.
fn mixed_error(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().chain(b).fold(1.0f64, |m, c| m.max(c.abs()));
    a.iter().zip(b).map(|(u, w)| (u - w).abs()).fold(0.0, f64::max) / scale
}

fn check_derivatives(sys: &SystemModel, points: &[Vector]) {
    let d = sys.dim();
    for x in points {
        let jac = sys.drift_jacobian(x);
        let parts = sys.diffusion_partials(x);
        for (k, part) in parts.iter().enumerate() {
            let col = fd4_column(x, k, 1e-3, |y| Matrix::from_column_slice(d, 1, sys.drift(y).as_slice()));
            let err = mixed_error(jac.column(k).as_slice(), col.as_slice());
            assert!(err < 1e-8, "{} drift ∂_{k} at {x:?}: {err}", sys.label());
            let ds = fd4_column(x, k, 1e-3, |y| sys.diffusion(y));
            let err = mixed_error(part.as_slice(), ds.as_slice());
            assert!(err < 1e-8, "{} σ ∂_{k} at {x:?}: {err}", sys.label());
        }
    }
}

#[test]
fn analytic_derivatives_match_differences() {
    check_derivatives(&make_double_well(0.7).unwrap(), &probe_points(1, None, 2.0, 100, 1));
    check_derivatives(
        &make_maier_stein(1.0, 0.1).unwrap(),
        &probe_points(2, None, 2.0, 100, 2),
    );
    check_derivatives(
        &make_maier_stein(10.0, 1.0).unwrap(),
        &probe_points(2, None, 2.0, 100, 3),
    );
    let npz = make_npz(NpzParams::default()).unwrap();
    let points: Vec<Vector> = probe_points(3, Some(&v(&[1.5, 1.5, 1.0])), 1.2, 200, 4)
        .into_iter()
        .filter(|x| (x[0] - 1.0).abs() > 0.01)
        .take(100)
        .collect();
    assert_eq!(points.len(), 100);
    check_derivatives(&npz, &points);
}

#[test]
fn npz_drift_is_continuous_across_the_kink() {
    let npz = make_npz(NpzParams::default()).unwrap();
    for (p, z) in [(0.5, 0.2), (2.0, 0.16), (1.0, 1.0)] {
        let below = npz.drift(&v(&[1.0 - 1e-12, p, z]));
        let at = npz.drift(&v(&[1.0, p, z]));
        let above = npz.drift(&v(&[1.0 + 1e-12, p, z]));
        assert!((&below - &at).norm() < 1e-10);
        assert!((&above - &at).norm() < 1e-10);
    }
}

#[test]
fn npz_regions_split_at_half_saturation() {
    let npz = make_npz(NpzParams::default()).unwrap();
    assert!(npz.is_piecewise());
    assert_ne!(npz.region(&v(&[0.9, 1.0, 1.0])), npz.region(&v(&[1.1, 1.0, 1.0])));
}

#[test]
fn npz_stays_bounded_deterministically() {
    let x0 = v(&[0.97932, 0.91703, 0.17016]) + v(&[0.01, -0.01, 0.005]);
    let npz = make_npz(NpzParams::default()).unwrap();
    let p = ControlProblem::new(npz, x0, v(&[0.0, 0.0, 0.0]), 0.0, 500.0, 1.0).unwrap();
    let n = 50_001;
    let states = forward_sweep(&p, &uniform_grid(0.0, 500.0, n), &vec![Vector::zeros(3); n]).unwrap();
    for x in &states {
        assert!(x.iter().all(|c| c.is_finite() && c.abs() < 100.0), "{x:?}");
    }
}

#[test]
fn npz_rejects_zero_noise() {
    let params = NpzParams {
        sigma: [1.0, 0.0, 1.0],
        ..NpzParams::default()
    };
    assert!(matches!(make_npz(params), Err(OmError::SingularDiffusion { .. })));
}

fn custom_double_well() -> CustomSystem {
    let mut c = CustomSystem::new(
        "rebuilt",
        1,
        Arc::new(|x: &Vector| v(&[x[0] - x[0].powi(3)])),
        Arc::new(|_: &Vector| Matrix::identity(1, 1)),
    );
    c.drift_jacobian = Some(Arc::new(|x: &Vector| {
        Matrix::from_element(1, 1, 1.0 - 3.0 * x[0] * x[0])
    }));
    c
}

#[test]
fn custom_rebuild_matches_builtin() {
    let builtin = make_double_well(1.0).unwrap();
    let rebuilt = make_custom(custom_double_well()).unwrap();
    for x in probe_points(1, None, 2.0, 50, 9) {
        let a = geometry_point(&builtin, &x).unwrap();
        let b = geometry_point(&rebuilt, &x).unwrap();
        assert!(
            (a.divergence_b - b.divergence_b).abs() < 1e-12,
            "{} vs {}",
            a.divergence_b,
            b.divergence_b
        );
        assert!((a.scalar_curvature_r - b.scalar_curvature_r).abs() < 1e-12);
        assert!((&a.metric_v - &b.metric_v).norm() < 1e-12);
        assert!((&a.modified_drift_b - &b.modified_drift_b).norm() < 1e-12);
    }
}

#[test]
fn custom_wrong_jacobian_is_caught() {
    let mut c = custom_double_well();
    c.drift_jacobian = Some(Arc::new(|x: &Vector| {
        Matrix::from_element(1, 1, 1.0 - 2.0 * x[0] * x[0])
    }));
    assert!(matches!(make_custom(c), Err(OmError::DerivativeMismatch { .. })));
}

#[test]
fn custom_zero_row_is_singular() {
    let c = CustomSystem::new(
        "degenerate",
        2,
        Arc::new(|x: &Vector| -x),
        Arc::new(|_: &Vector| Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])),
    );
    assert!(matches!(make_custom(c), Err(OmError::SingularDiffusion { .. })));
}

#[test]
fn custom_without_derivatives_is_accepted() {
    let c = CustomSystem::new(
        "plain",
        2,
        Arc::new(|x: &Vector| v(&[x[1], -x[0] - 0.5 * x[1]])),
        Arc::new(|x: &Vector| Matrix::from_row_slice(2, 2, &[1.0 + 0.1 * x[0] * x[0], 0.0, 0.0, 1.0])),
    );
    let sys = make_custom(c).unwrap();
    let ms = make_maier_stein(0.0, 0.1).unwrap();
    // Same diffusion as Maier-Stein with ε = 0.1, so the curvature must agree.
    for x in probe_points(2, None, 1.5, 20, 11) {
        let a = geometry_point(&sys, &x).unwrap().scalar_curvature_r;
        let b = geometry_point(&ms, &x).unwrap().scalar_curvature_r;
        assert!((a - b).abs() < 1e-5 * b.abs().max(1.0), "{a} vs {b}");
    }
}
