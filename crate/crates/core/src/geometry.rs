//! Riemannian geometry induced by the diffusion and the Onsager-Machlup
//! Lagrangian built from it.
//!
//! With `V = (σσᵀ)⁻¹` as metric `g_{ij}` and `σσᵀ` as its inverse `gⁱʲ`:
//!
//! * `Γⁱ_{lj} = ½ Σ_m gⁱᵐ (∂_j g_{lm} + ∂_l g_{jm} − ∂_m g_{lj})`
//! * `bⁱ = b̃ⁱ − ½ Σ_{lj} gˡʲ Γⁱ_{lj}`
//! * `div b = |V|^{-1/2} Σ_i ∂_i (bⁱ |V|^{1/2})`
//! * `R = gⁱᵏ R_{ik}` with `R_{ik} = ∂_m Γᵐ_{ik} − ∂_k Γᵐ_{mi} + Γᵐ_{ma} Γᵃ_{ik} − Γᵐ_{ka} Γᵃ_{mi}`
//! * `L(z, ż) = ½ [(ż − b)ᵀ V (ż − b) + div b − R/6]`

use alloc::{vec, vec::Vec};
use core::ops::Index;

use crate::error::{OmError, Result};
use crate::fd;
use crate::model::{min_symmetric_eigenvalue, Matrix, SystemModel, Vector, SPD_THRESHOLD};
use crate::trajectory::Trajectory;

/// Christoffel symbols `Γⁱ_{lj}` stored with the upper index first.
#[derive(Clone, Debug, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn offset(&self, i: usize, l: usize, j: usize) -> usize {
        (i * self.dim + l) * self.dim + j
    }

    pub fn get(&self, i: usize, l: usize, j: usize) -> f64 {
        self.data[self.offset(i, l, j)]
    }

    fn set(&mut self, i: usize, l: usize, j: usize, v: f64) {
        let k = self.offset(i, l, j);
        self.data[k] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }
}

impl Index<(usize, usize, usize)> for Christoffel {
    type Output = f64;

    fn index(&self, (i, l, j): (usize, usize, usize)) -> &f64 {
        &self.data[self.offset(i, l, j)]
    }
}

/// Every geometric quantity entering the action at one point.
#[derive(Clone, Debug)]
pub struct GeometryPoint {
    pub x: Vector,
    pub metric_v: Matrix,
    pub metric_inverse: Matrix,
    pub christoffel: Christoffel,
    pub modified_drift_b: Vector,
    pub divergence_b: f64,
    pub scalar_curvature_r: f64,
}

fn check_dim(sys: &SystemModel, x: &Vector) -> Result<()> {
    if x.len() != sys.dim() {
        return Err(OmError::DimensionMismatch {
            what: "state",
            expected: sys.dim(),
            found: x.len(),
        });
    }
    Ok(())
}

/// `σσᵀ` after the positive-definiteness check.
fn diffusion_tensor(sigma: &Matrix) -> Result<Matrix> {
    let a = sigma * sigma.transpose();
    let a = (&a + a.transpose()) * 0.5;
    let min_eigenvalue = min_symmetric_eigenvalue(&a);
    if !(min_eigenvalue > SPD_THRESHOLD) {
        return Err(OmError::SingularDiffusion { min_eigenvalue });
    }
    Ok(a)
}

fn invert_spd(a: &Matrix) -> Result<Matrix> {
    let n = a.nrows();
    let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || a[(i, j)] == 0.0));
    if diagonal {
        return Ok(Matrix::from_fn(n, n, |i, j| if i == j { 1.0 / a[(i, i)] } else { 0.0 }));
    }
    let inv = a
        .clone()
        .cholesky()
        .ok_or(OmError::SingularDiffusion {
            min_eigenvalue: min_symmetric_eigenvalue(a),
        })?
        .inverse();
    Ok((&inv + inv.transpose()) * 0.5)
}

/// Riemannian metric `V(x) = (σσᵀ)⁻¹`.
pub fn metric(sys: &SystemModel, x: &Vector) -> Result<Matrix> {
    check_dim(sys, x)?;
    let a = diffusion_tensor(&sys.diffusion(x))?;
    invert_spd(&a)
}

/// `∂_l V` for every coordinate `l`.
fn metric_partials(sys: &SystemModel, x: &Vector, metric_v: &Matrix) -> Result<Vec<Matrix>> {
    let d = sys.dim();
    if sys.is_constant_diffusion() {
        return Ok((0..d).map(|_| Matrix::zeros(d, d)).collect());
    }
    if let Some(parts) = sys.analytic_diffusion_partials(x) {
        let sigma = sys.diffusion(x);
        let st = sigma.transpose();
        return Ok(parts
            .iter()
            .map(|ds| {
                let da = ds * &st + &sigma * ds.transpose();
                -(metric_v * da * metric_v)
            })
            .collect());
    }
    (0..d)
        .map(|l| {
            let h = fd::step(x[l]);
            let (p, m) = fd::shifted(x, l, h);
            Ok((metric(sys, &p)? - metric(sys, &m)?) / (2.0 * h))
        })
        .collect()
}

fn christoffel_from(metric_inverse: &Matrix, dg: &[Matrix]) -> Christoffel {
    let d = metric_inverse.nrows();
    let mut gamma = Christoffel::zeros(d);
    for i in 0..d {
        for l in 0..d {
            for j in l..d {
                let mut s = 0.0;
                for m in 0..d {
                    s += metric_inverse[(i, m)] * (dg[j][(l, m)] + dg[l][(j, m)] - dg[m][(l, j)]);
                }
                gamma.set(i, l, j, 0.5 * s);
                gamma.set(i, j, l, 0.5 * s);
            }
        }
    }
    gamma
}

struct Frame {
    sigma: Matrix,
    metric_inverse: Matrix,
    metric_v: Matrix,
    christoffel: Christoffel,
}

fn frame(sys: &SystemModel, x: &Vector) -> Result<Frame> {
    check_dim(sys, x)?;
    let sigma = sys.diffusion(x);
    let metric_inverse = diffusion_tensor(&sigma)?;
    let metric_v = invert_spd(&metric_inverse)?;
    let christoffel = if sys.is_constant_diffusion() {
        Christoffel::zeros(sys.dim())
    } else {
        let dg = metric_partials(sys, x, &metric_v)?;
        christoffel_from(&metric_inverse, &dg)
    };
    Ok(Frame {
        sigma,
        metric_inverse,
        metric_v,
        christoffel,
    })
}

/// `Γⁱ_{lj}` of the metric `V`, symmetric in the lower indices by construction.
pub fn christoffel(sys: &SystemModel, x: &Vector) -> Result<Christoffel> {
    Ok(frame(sys, x)?.christoffel)
}

/// `cⁱ = −½ Σ_{lj} gˡʲ Γⁱ_{lj}`, so that `b = b̃ + c`.
fn drift_correction(metric_inverse: &Matrix, gamma: &Christoffel) -> Vector {
    let d = metric_inverse.nrows();
    Vector::from_fn(d, |i, _| {
        let mut s = 0.0;
        for l in 0..d {
            for j in 0..d {
                s += metric_inverse[(l, j)] * gamma.get(i, l, j);
            }
        }
        -0.5 * s
    })
}

/// Modified drift `b = b̃ − ½ Σ gˡʲ Γⁱ_{lj}`.
pub fn modified_drift(sys: &SystemModel, x: &Vector) -> Result<Vector> {
    let fr = frame(sys, x)?;
    Ok(sys.drift(x) + drift_correction(&fr.metric_inverse, &fr.christoffel))
}

/// `√|V| = 1/√det(σσᵀ)`.
fn volume_density(metric_inverse: &Matrix) -> f64 {
    1.0 / libm::sqrt(metric_inverse.determinant())
}

fn correction_density(sys: &SystemModel, x: &Vector) -> Result<(Vector, f64)> {
    let fr = frame(sys, x)?;
    Ok((
        drift_correction(&fr.metric_inverse, &fr.christoffel),
        volume_density(&fr.metric_inverse),
    ))
}

fn divergence_with(sys: &SystemModel, x: &Vector, fr: &Frame) -> Result<f64> {
    let d = sys.dim();
    if sys.is_constant_diffusion() {
        return Ok(sys.drift_jacobian(x).trace());
    }
    let vol = volume_density(&fr.metric_inverse);
    if let Some(jac) = sys.analytic_drift_jacobian(x) {
        // div b = tr ∂b̃ + b̃ⁱ ∂_i log√|V| + |V|^{-1/2} ∂_i(cⁱ √|V|), with
        // ∂_i log√|V| = Γᵐ_{mi}; only the correction term is differenced.
        let drift = sys.drift(x);
        let mut div = jac.trace();
        for i in 0..d {
            let mut log_vol = 0.0;
            for m in 0..d {
                log_vol += fr.christoffel.get(m, m, i);
            }
            div += drift[i] * log_vol;
        }
        for i in 0..d {
            let h = fd::step(x[i]);
            let (p, m) = fd::shifted(x, i, h);
            let (cp, vp) = correction_density(sys, &p)?;
            let (cm, vm) = correction_density(sys, &m)?;
            div += (cp[i] * vp - cm[i] * vm) / (2.0 * h) / vol;
        }
        return Ok(div);
    }
    // The weighted drift carries differenced Christoffel symbols.
    let mut div = 0.0;
    for i in 0..d {
        let h = fd::nested_step(x[i]);
        let (p, m) = fd::shifted(x, i, h);
        let weighted = |y: &Vector| -> Result<f64> {
            let fr = frame(sys, y)?;
            let b = sys.drift(y) + drift_correction(&fr.metric_inverse, &fr.christoffel);
            Ok(b[i] * volume_density(&fr.metric_inverse))
        };
        div += (weighted(&p)? - weighted(&m)?) / (2.0 * h);
    }
    Ok(div / vol)
}

/// Covariant divergence of the modified drift.
pub fn riemannian_divergence(sys: &SystemModel, x: &Vector) -> Result<f64> {
    let fr = frame(sys, x)?;
    divergence_with(sys, x, &fr)
}

fn curvature_with(sys: &SystemModel, x: &Vector, fr: &Frame) -> Result<f64> {
    if let Some(r) = sys.curvature_override() {
        return Ok(r(x));
    }
    let d = sys.dim();
    if sys.is_constant_diffusion() || d == 1 {
        return Ok(0.0);
    }
    // dgamma[m] = ∂_m Γ
    let mut dgamma = Vec::with_capacity(d);
    for m in 0..d {
        let h = fd::nested_step(x[m]);
        let (p, q) = fd::shifted(x, m, h);
        let gp = christoffel(sys, &p)?;
        let gq = christoffel(sys, &q)?;
        let data: Vec<f64> = gp
            .as_slice()
            .iter()
            .zip(gq.as_slice())
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect();
        dgamma.push(Christoffel { dim: d, data });
    }
    let g = &fr.christoffel;
    let mut r = 0.0;
    for i in 0..d {
        for k in 0..d {
            let w = fr.metric_inverse[(i, k)];
            if w == 0.0 {
                continue;
            }
            let mut ricci = 0.0;
            for m in 0..d {
                ricci += dgamma[m].get(m, i, k) - dgamma[k].get(m, m, i);
                for a in 0..d {
                    ricci += g.get(m, m, a) * g.get(a, i, k) - g.get(m, k, a) * g.get(a, m, i);
                }
            }
            r += w * ricci;
        }
    }
    Ok(r)
}

/// Scalar curvature of `V`. One-dimensional and constant-diffusion systems
/// are flat; otherwise the Christoffel derivatives use nested central stencils.
pub fn scalar_curvature(sys: &SystemModel, x: &Vector) -> Result<f64> {
    let fr = frame(sys, x)?;
    curvature_with(sys, x, &fr)
}

/// Evaluates the whole geometric bundle at `x`.
pub fn geometry_point(sys: &SystemModel, x: &Vector) -> Result<GeometryPoint> {
    let fr = frame(sys, x)?;
    let divergence_b = divergence_with(sys, x, &fr)?;
    let scalar_curvature_r = curvature_with(sys, x, &fr)?;
    let modified_drift_b = sys.drift(x) + drift_correction(&fr.metric_inverse, &fr.christoffel);
    Ok(GeometryPoint {
        x: x.clone(),
        metric_v: fr.metric_v,
        metric_inverse: fr.metric_inverse,
        christoffel: fr.christoffel,
        modified_drift_b,
        divergence_b,
        scalar_curvature_r,
    })
}

/// The pieces of the Lagrangian at one state, in control form:
/// `L(x, θ) = ½ [(σθ + Δ)ᵀ V (σθ + Δ) + potential]` with `Δ = b̃ − b` and
/// `potential = div b − R/6`.
#[derive(Clone, Debug)]
pub struct LocalCost {
    pub drift: Vector,
    pub sigma: Matrix,
    pub metric_v: Matrix,
    pub offset: Vector,
    pub potential: f64,
}

impl LocalCost {
    pub fn at(sys: &SystemModel, x: &Vector) -> Result<Self> {
        let fr = frame(sys, x)?;
        let div = divergence_with(sys, x, &fr)?;
        let r = curvature_with(sys, x, &fr)?;
        let offset = -drift_correction(&fr.metric_inverse, &fr.christoffel);
        Ok(Self {
            drift: sys.drift(x),
            sigma: fr.sigma,
            metric_v: fr.metric_v,
            offset,
            potential: div - r / 6.0,
        })
    }

    /// `σθ + Δ`, which equals `ẋ − b` along the controlled dynamics.
    pub fn residual(&self, theta: &Vector) -> Vector {
        &self.sigma * theta + &self.offset
    }

    pub fn lagrangian(&self, theta: &Vector) -> f64 {
        let r = self.residual(theta);
        0.5 * (r.dot(&(&self.metric_v * &r)) + self.potential)
    }

    /// `∇θ L = σᵀ V (σθ + Δ)`.
    pub fn lagrangian_theta_gradient(&self, theta: &Vector) -> Vector {
        self.sigma.transpose() * (&self.metric_v * self.residual(theta))
    }

    /// Velocity form, `v − b = v − b̃ + Δ`.
    pub fn lagrangian_velocity(&self, v: &Vector) -> f64 {
        let r = v - &self.drift + &self.offset;
        0.5 * (r.dot(&(&self.metric_v * &r)) + self.potential)
    }

    /// `V (v − b)`, the momentum `∂L/∂ż`.
    pub fn momentum(&self, v: &Vector) -> Vector {
        &self.metric_v * (v - &self.drift + &self.offset)
    }
}

/// `L(z, ż) = ½ [(ż − b)ᵀ V (ż − b) + div b − R/6]`.
pub fn lagrangian_velocity(sys: &SystemModel, x: &Vector, v: &Vector) -> Result<f64> {
    Ok(LocalCost::at(sys, x)?.lagrangian_velocity(v))
}

/// Lagrangian expressed through the control `θ` with `ż = b̃ + σθ`.
pub fn lagrangian_control(sys: &SystemModel, x: &Vector, theta: &Vector) -> Result<f64> {
    Ok(LocalCost::at(sys, x)?.lagrangian(theta))
}

/// Centered-difference velocities, one-sided at both ends.
pub fn path_velocities(states: &[Vector], spacing: f64) -> Vec<Vector> {
    let n = states.len();
    (0..n)
        .map(|i| {
            if i == 0 {
                (&states[1] - &states[0]) / spacing
            } else if i == n - 1 {
                (&states[n - 1] - &states[n - 2]) / spacing
            } else {
                (&states[i + 1] - &states[i - 1]) / (2.0 * spacing)
            }
        })
        .collect()
}

/// Trapezoidal Onsager-Machlup action of a discrete path.
pub fn om_action(sys: &SystemModel, traj: &Trajectory) -> Result<f64> {
    traj.validate()?;
    let h = traj.spacing();
    if h == 0.0 {
        return Ok(0.0);
    }
    let states = traj.states();
    let velocities = path_velocities(states, h);
    let n = states.len();
    let mut total = 0.0;
    for (i, (x, v)) in states.iter().zip(&velocities).enumerate() {
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        total += w * lagrangian_velocity(sys, x, v)?;
    }
    Ok(total * h)
}
