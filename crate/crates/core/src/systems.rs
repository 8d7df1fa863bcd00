//! Benchmark systems (double well, Maier-Stein, NPZ plankton model) and
//! validated user-defined systems.

use alloc::{format, string::String, vec, vec::Vec};

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{OmError, Result};
use crate::geometry;
use crate::model::{Matrix, MatrixField, PartialsField, SystemModel, Vector, VectorField};

/// `dx = (x − x³) dt + σ dW`.
pub fn make_double_well(sigma: f64) -> Result<SystemModel> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(OmError::NonpositiveNoise(sigma));
    }
    Ok(SystemModel::new(
        "double_well",
        1,
        |x: &Vector| Vector::from_element(1, x[0] - x[0] * x[0] * x[0]),
        move |_: &Vector| Matrix::from_element(1, 1, sigma),
    )?
    .with_drift_jacobian(|x: &Vector| Matrix::from_element(1, 1, 1.0 - 3.0 * x[0] * x[0]))
    .with_diffusion_partials(|_: &Vector| vec![Matrix::zeros(1, 1)])
    .with_constant_diffusion())
}

/// Maier-Stein drift `(x − x³ − γxy², −(1 + x²)y)` with multiplicative noise
/// `σ = diag(1 + εx², 1)`.
pub fn make_maier_stein(gamma: f64, epsilon: f64) -> Result<SystemModel> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() || !gamma.is_finite() {
        return Err(OmError::InvalidParams(format!(
            "Maier-Stein needs finite γ and ε ≥ 0, got γ = {gamma}, ε = {epsilon}"
        )));
    }
    let sys = SystemModel::new(
        "maier_stein",
        2,
        move |v: &Vector| {
            let (x, y) = (v[0], v[1]);
            Vector::from_column_slice(&[x - x * x * x - gamma * x * y * y, -(1.0 + x * x) * y])
        },
        move |v: &Vector| {
            let x = v[0];
            Matrix::from_row_slice(2, 2, &[1.0 + epsilon * x * x, 0.0, 0.0, 1.0])
        },
    )?
    .with_drift_jacobian(move |v: &Vector| {
        let (x, y) = (v[0], v[1]);
        Matrix::from_row_slice(
            2,
            2,
            &[
                1.0 - 3.0 * x * x - gamma * y * y,
                -2.0 * gamma * x * y,
                -2.0 * x * y,
                -(1.0 + x * x),
            ],
        )
    })
    .with_diffusion_partials(move |v: &Vector| {
        let x = v[0];
        vec![
            Matrix::from_row_slice(2, 2, &[2.0 * epsilon * x, 0.0, 0.0, 0.0]),
            Matrix::zeros(2, 2),
        ]
    });
    Ok(if epsilon == 0.0 {
        sys.with_constant_diffusion()
    } else {
        sys
    })
}

/// Parameters of the nutrient-phytoplankton-zooplankton model
///
/// ```text
/// dN = [D(N0 − N) − f(N)P] dt + σ1 dW1
/// dP = [αf(N)P − g(P)Z − D1 P] dt + σ2 dW2
/// dZ = [βg(P)Z − D2 Z] dt + σ3 dW3
/// ```
///
/// with `f(N) = (b/a)N` for `N ≤ a`, `b` above, and `g(P) = cP/(1 + dP)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NpzParams {
    pub big_d: f64,
    pub n0: f64,
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub c: f64,
    pub d: f64,
    pub d1: f64,
    pub beta: f64,
    pub d2: f64,
    pub sigma: [f64; 3],
}

impl Default for NpzParams {
    /// The bistable parameter set (stable coexisting equilibrium plus a
    /// stable limit cycle), unit noise.
    fn default() -> Self {
        Self {
            big_d: 0.1,
            n0: 9.96,
            a: 1.0,
            b: 1.0,
            alpha: 1.0,
            c: 5.0,
            d: 0.1,
            d1: 0.2,
            beta: 0.5,
            d2: 2.1,
            sigma: [1.0, 1.0, 1.0],
        }
    }
}

impl NpzParams {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("D", self.big_d),
            ("N0", self.n0),
            ("a", self.a),
            ("b", self.b),
            ("alpha", self.alpha),
            ("c", self.c),
            ("d", self.d),
            ("D1", self.d1),
            ("beta", self.beta),
            ("D2", self.d2),
        ];
        for (name, v) in named {
            if !(v > 0.0) || !v.is_finite() {
                return Err(OmError::InvalidParams(format!(
                    "NPZ parameter {name} must be positive, got {v}"
                )));
            }
        }
        for (i, s) in self.sigma.iter().enumerate() {
            if !(*s >= 0.0) || !s.is_finite() {
                return Err(OmError::InvalidParams(format!(
                    "NPZ noise intensity sigma{} must be nonnegative, got {s}",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// Nutrient uptake `f(N)` and its derivative; the lower branch owns `N = a`.
    pub fn uptake(&self, n: f64) -> (f64, f64) {
        if n <= self.a {
            (self.b / self.a * n, self.b / self.a)
        } else {
            (self.b, 0.0)
        }
    }

    /// Grazing `g(P)` and its derivative.
    pub fn grazing(&self, p: f64) -> (f64, f64) {
        let den = 1.0 + self.d * p;
        (self.c * p / den, self.c / (den * den))
    }

    pub fn drift(&self, x: &Vector) -> Vector {
        let (n, p, z) = (x[0], x[1], x[2]);
        let (f, _) = self.uptake(n);
        let (g, _) = self.grazing(p);
        Vector::from_column_slice(&[
            self.big_d * (self.n0 - n) - f * p,
            self.alpha * f * p - g * z - self.d1 * p,
            self.beta * g * z - self.d2 * z,
        ])
    }

    pub fn jacobian(&self, x: &Vector) -> Matrix {
        let (n, p, z) = (x[0], x[1], x[2]);
        let (f, df) = self.uptake(n);
        let (g, dg) = self.grazing(p);
        Matrix::from_row_slice(
            3,
            3,
            &[
                -self.big_d - df * p,
                -f,
                0.0,
                self.alpha * df * p,
                self.alpha * f - dg * z - self.d1,
                -g,
                0.0,
                self.beta * dg * z,
                self.beta * g - self.d2,
            ],
        )
    }
}

/// NPZ model with constant diagonal (additive) noise.
pub fn make_npz(params: NpzParams) -> Result<SystemModel> {
    params.validate()?;
    let [s1, s2, s3] = params.sigma;
    let min = s1.min(s2).min(s3);
    if !(min * min > crate::model::SPD_THRESHOLD) {
        return Err(OmError::SingularDiffusion {
            min_eigenvalue: min * min,
        });
    }
    Ok(SystemModel::new(
        "npz",
        3,
        move |x: &Vector| params.drift(x),
        move |_: &Vector| Matrix::from_diagonal(&Vector::from_column_slice(&[s1, s2, s3])),
    )?
    .with_drift_jacobian(move |x: &Vector| params.jacobian(x))
    .with_diffusion_partials(|_: &Vector| vec![Matrix::zeros(3, 3); 3])
    .with_regions(move |x: &Vector| u32::from(x[0] > params.a))
    .with_constant_diffusion())
}

/// Callbacks for a user-defined system. Derivatives are optional.
#[derive(Clone)]
pub struct CustomSystem {
    pub label: String,
    pub dim: usize,
    pub drift: VectorField,
    pub diffusion: MatrixField,
    pub drift_jacobian: Option<MatrixField>,
    pub diffusion_partials: Option<PartialsField>,
    pub constant_diffusion: bool,
    /// Half-width of the box `[-r, r]^d` the probes are drawn from.
    pub probe_radius: f64,
    pub probe_center: Option<Vector>,
}

impl CustomSystem {
    pub fn new(label: impl Into<String>, dim: usize, drift: VectorField, diffusion: MatrixField) -> Self {
        Self {
            label: label.into(),
            dim,
            drift,
            diffusion,
            drift_jacobian: None,
            diffusion_partials: None,
            constant_diffusion: false,
            probe_radius: 2.0,
            probe_center: None,
        }
    }
}

pub const CUSTOM_PROBES: usize = 20;
pub const CUSTOM_DERIVATIVE_TOLERANCE: f64 = 1e-4;

/// Deterministic probe points in a box.
pub fn probe_points(dim: usize, center: Option<&Vector>, radius: f64, count: usize, seed: u64) -> Vec<Vector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            Vector::from_fn(dim, |i, _| {
                let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
                center.map_or(0.0, |c| c[i]) + radius * (2.0 * u - 1.0)
            })
        })
        .collect()
}

/// Builds a system from callbacks. The diffusion must be positive definite
/// at every probe and analytic derivatives must match central differences
/// there to [`CUSTOM_DERIVATIVE_TOLERANCE`].
pub fn make_custom(custom: CustomSystem) -> Result<SystemModel> {
    let drift = custom.drift.clone();
    let diffusion = custom.diffusion.clone();
    let mut sys = SystemModel::new(
        custom.label.clone(),
        custom.dim,
        move |x: &Vector| drift(x),
        move |x: &Vector| diffusion(x),
    )?;
    if let Some(j) = custom.drift_jacobian.clone() {
        sys = sys.with_drift_jacobian(move |x: &Vector| j(x));
    }
    if let Some(p) = custom.diffusion_partials.clone() {
        sys = sys.with_diffusion_partials(move |x: &Vector| p(x));
    }
    if custom.constant_diffusion {
        sys = sys.with_constant_diffusion();
    }
    let probes = probe_points(
        custom.dim,
        custom.probe_center.as_ref(),
        custom.probe_radius,
        CUSTOM_PROBES,
        0x5eed,
    );
    for x in &probes {
        geometry::metric(&sys, x)?;
    }
    sys.verify_derivatives(&probes, CUSTOM_DERIVATIVE_TOLERANCE)?;
    Ok(sys)
}
