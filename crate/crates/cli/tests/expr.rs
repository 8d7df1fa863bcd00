use std::collections::BTreeMap;

use ompath::config::{CustomBlock, DerivativeMode};
use ompath::expr::{custom_system, Expr};
use ompath_core::geometry::geometry_point;
use ompath_core::systems::{make_double_well, make_maier_stein, probe_points};
use ompath_core::Vector;

fn v(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

fn block(dim: usize, drift: &[&str], diffusion: &[&[&str]], constants: &[(&str, f64)]) -> CustomBlock {
    CustomBlock {
        label: None,
        dim,
        drift: drift.iter().map(|s| s.to_string()).collect(),
        diffusion: diffusion
            .iter()
            .map(|r| r.iter().map(|s| s.to_string()).collect())
            .collect(),
        constants: Some(constants.iter().map(|(k, v)| (k.to_string(), *v)).collect()),
        derivatives: None,
        probe_radius: None,
        probe_center: None,
    }
}

#[test]
fn expressions_bind_states_and_constants() {
    let constants: BTreeMap<String, f64> = [("k".to_string(), 2.0)].into();
    let e = Expr::parse("k*x2 - x1^2", 2, &constants).unwrap();
    assert_eq!(e.eval(&v(&[3.0, 5.0])), 1.0);
    assert!(!e.is_constant());
    let d1 = e.partial(0).unwrap();
    let d2 = e.partial(1).unwrap();
    assert_eq!(d1.eval(&v(&[3.0, 5.0])), -6.0);
    assert_eq!(d2.eval(&v(&[3.0, 5.0])), 2.0);
    assert!(Expr::parse("k", 2, &constants).unwrap().is_constant());
    assert_eq!(
        Expr::parse("k", 2, &constants)
            .unwrap()
            .partial(0)
            .unwrap()
            .eval(&v(&[1.0, 1.0])),
        0.0
    );
}

#[test]
fn unknown_names_and_bad_syntax_are_rejected() {
    let none = BTreeMap::new();
    assert!(Expr::parse("x3", 2, &none).is_err());
    assert!(Expr::parse("x0", 2, &none).is_err());
    assert!(Expr::parse("y", 2, &none).is_err());
    assert!(Expr::parse("x1 +* 2", 2, &none).is_err());
}

#[test]
fn double_well_from_text_matches_builtin() {
    let sys = custom_system(&block(1, &["x1 - x1^3"], &[&["s"]], &[("s", 1.0)])).unwrap();
    let builtin = make_double_well(1.0).unwrap();
    assert!(sys.is_constant_diffusion());
    for x in probe_points(1, None, 2.0, 50, 3) {
        let (a, b) = (geometry_point(&sys, &x).unwrap(), geometry_point(&builtin, &x).unwrap());
        assert!((a.divergence_b - b.divergence_b).abs() < 1e-12);
        assert!((&a.modified_drift_b - &b.modified_drift_b).norm() < 1e-12);
        assert_eq!(a.scalar_curvature_r, 0.0);
    }
}

#[test]
fn maier_stein_from_text_matches_builtin() {
    let text = block(
        2,
        &["x1 - x1^3 - g*x1*x2^2", "-(1 + x1^2)*x2"],
        &[&["1 + eps*x1^2", "0"], &["0", "1"]],
        &[("g", 1.0), ("eps", 0.5)],
    );
    let sys = custom_system(&text).unwrap();
    let builtin = make_maier_stein(1.0, 0.5).unwrap();
    assert!(!sys.is_constant_diffusion());
    for x in probe_points(2, None, 2.0, 50, 5) {
        let (a, b) = (geometry_point(&sys, &x).unwrap(), geometry_point(&builtin, &x).unwrap());
        let scale = b.divergence_b.abs().max(1.0);
        assert!(
            (a.divergence_b - b.divergence_b).abs() < 1e-10 * scale,
            "{} vs {}",
            a.divergence_b,
            b.divergence_b
        );
        assert!((&a.modified_drift_b - &b.modified_drift_b).norm() < 1e-10);
        assert!((a.christoffel.get(0, 0, 0) - b.christoffel.get(0, 0, 0)).abs() < 1e-12);
    }
}

#[test]
fn numeric_mode_skips_symbolic_derivatives() {
    let mut text = block(1, &["sin(x1)"], &[&["1"]], &[]);
    text.derivatives = Some(DerivativeMode::Numeric);
    let sys = custom_system(&text).unwrap();
    assert!(!sys.has_drift_jacobian());
    let j = sys.drift_jacobian(&v(&[0.3]));
    assert!((j[(0, 0)] - 0.3f64.cos()).abs() < 1e-8);
    text.derivatives = None;
    assert!(custom_system(&text).unwrap().has_drift_jacobian());
}

#[test]
fn singular_expressions_fail_validation() {
    assert!(custom_system(&block(2, &["x2", "-x1"], &[&["1", "0"], &["0", "0"]], &[])).is_err());
}

#[test]
fn clashing_constant_names_are_rejected() {
    for name in ["e", "PI", "x1", "x12", "a b"] {
        let err = custom_system(&block(1, &["-x1"], &[&["1"]], &[(name, 0.5)])).unwrap_err();
        assert!(err.to_string().contains(name), "{err}");
    }
    // Built-in constants stay usable inside expressions.
    let sys = custom_system(&block(1, &["-PI*x1"], &[&["1"]], &[("x", 0.5)])).unwrap();
    assert!((sys.drift(&v(&[1.0]))[0] + std::f64::consts::PI).abs() < 1e-15);
}
