//! SDE description `dX = b̃(X) dt + σ(X) dB` with optional analytic derivatives.

use alloc::{string::String, sync::Arc, vec::Vec};
use core::fmt;

use crate::error::{OmError, Result};
use crate::fd;

pub type Vector = nalgebra::DVector<f64>;
pub type Matrix = nalgebra::DMatrix<f64>;

pub type VectorField = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;
pub type MatrixField = Arc<dyn Fn(&Vector) -> Matrix + Send + Sync>;
/// `∂σ/∂x_l` for every coordinate `l`, one `d×d` matrix each.
pub type PartialsField = Arc<dyn Fn(&Vector) -> Vec<Matrix> + Send + Sync>;
pub type ScalarField = Arc<dyn Fn(&Vector) -> f64 + Send + Sync>;
/// Label of the smooth piece of state space containing a point.
pub type RegionField = Arc<dyn Fn(&Vector) -> u32 + Send + Sync>;

/// Threshold on the smallest eigenvalue of `σσᵀ`.
pub const SPD_THRESHOLD: f64 = 1e-12;

/// One autonomous SDE with square diffusion (noise dimension equals state
/// dimension). Immutable once built and cheap to clone.
#[derive(Clone)]
pub struct SystemModel {
    label: String,
    dim: usize,
    drift: VectorField,
    diffusion: MatrixField,
    drift_jacobian: Option<MatrixField>,
    diffusion_partials: Option<PartialsField>,
    scalar_curvature: Option<ScalarField>,
    region: Option<RegionField>,
    constant_diffusion: bool,
}

impl fmt::Debug for SystemModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemModel")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("drift_jacobian", &self.drift_jacobian.is_some())
            .field("diffusion_partials", &self.diffusion_partials.is_some())
            .field("scalar_curvature", &self.scalar_curvature.is_some())
            .field("piecewise", &self.region.is_some())
            .field("constant_diffusion", &self.constant_diffusion)
            .finish()
    }
}

impl SystemModel {
    /// Wraps the drift and diffusion callbacks. The diffusion is probed once
    /// at the origin; anything other than a `dim×dim` matrix is rejected.
    pub fn new(
        label: impl Into<String>,
        dim: usize,
        drift: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
        diffusion: impl Fn(&Vector) -> Matrix + Send + Sync + 'static,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(OmError::InvalidParams("state dimension must be positive".into()));
        }
        let origin = Vector::zeros(dim);
        let b = drift(&origin);
        if b.len() != dim {
            return Err(OmError::DimensionMismatch {
                what: "drift",
                expected: dim,
                found: b.len(),
            });
        }
        let s = diffusion(&origin);
        if s.nrows() != dim {
            return Err(OmError::DimensionMismatch {
                what: "diffusion rows",
                expected: dim,
                found: s.nrows(),
            });
        }
        if s.ncols() != dim {
            return Err(OmError::DimensionMismatch {
                what: "noise dimension",
                expected: dim,
                found: s.ncols(),
            });
        }
        Ok(Self {
            label: label.into(),
            dim,
            drift: Arc::new(drift),
            diffusion: Arc::new(diffusion),
            drift_jacobian: None,
            diffusion_partials: None,
            scalar_curvature: None,
            region: None,
            constant_diffusion: false,
        })
    }

    pub fn with_drift_jacobian(mut self, f: impl Fn(&Vector) -> Matrix + Send + Sync + 'static) -> Self {
        self.drift_jacobian = Some(Arc::new(f));
        self
    }

    pub fn with_diffusion_partials(mut self, f: impl Fn(&Vector) -> Vec<Matrix> + Send + Sync + 'static) -> Self {
        self.diffusion_partials = Some(Arc::new(f));
        self
    }

    /// Overrides the general curvature engine with a closed form.
    pub fn with_scalar_curvature(mut self, f: impl Fn(&Vector) -> f64 + Send + Sync + 'static) -> Self {
        self.scalar_curvature = Some(Arc::new(f));
        self
    }

    /// Declares the fields piecewise smooth. Finite differences of
    /// x-derivatives never straddle two regions; they go one-sided instead.
    pub fn with_regions(mut self, f: impl Fn(&Vector) -> u32 + Send + Sync + 'static) -> Self {
        self.region = Some(Arc::new(f));
        self
    }

    pub fn region(&self, x: &Vector) -> u32 {
        self.region.as_ref().map_or(0, |r| r(x))
    }

    pub fn is_piecewise(&self) -> bool {
        self.region.is_some()
    }

    /// Differencing step for x-gradients of geometric quantities (div b, R).
    /// Wider when the geometry is itself assembled from differences.
    pub fn geometry_gradient_step(&self) -> fn(f64) -> f64 {
        if self.has_diffusion_partials() || self.is_constant_diffusion() {
            fd::nested_step
        } else {
            fd::outer_step
        }
    }

    /// `∇f(x)` by central differences, one-sided (second order) where the
    /// stencil would leave the region of `x`.
    pub fn gradient_in_region<E>(
        &self,
        x: &Vector,
        step_of: impl Fn(f64) -> f64,
        f: impl FnMut(&Vector) -> core::result::Result<f64, E>,
    ) -> core::result::Result<Vector, E> {
        match &self.region {
            None => fd::gradient(x, step_of, f),
            Some(r) => fd::gradient_within(x, step_of, |y| r(y) == r(x), f),
        }
    }

    /// Central-difference Jacobian of `f`, one-sided where the stencil would
    /// leave the region of `x`.
    pub fn jacobian_in_region(&self, x: &Vector, f: impl Fn(&Vector) -> Vector) -> Matrix {
        match &self.region {
            None => fd::jacobian(x, f),
            Some(r) => fd::jacobian_within(x, |y| r(y) == r(x), f),
        }
    }

    /// Declares σ constant in x; the geometry then short-cuts to the flat case.
    pub fn with_constant_diffusion(mut self) -> Self {
        self.constant_diffusion = true;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn noise_dim(&self) -> usize {
        self.dim
    }

    pub fn has_drift_jacobian(&self) -> bool {
        self.drift_jacobian.is_some()
    }

    pub fn has_diffusion_partials(&self) -> bool {
        self.diffusion_partials.is_some()
    }

    pub fn is_constant_diffusion(&self) -> bool {
        self.constant_diffusion
    }

    pub(crate) fn curvature_override(&self) -> Option<&ScalarField> {
        self.scalar_curvature.as_ref()
    }

    pub fn drift(&self, x: &Vector) -> Vector {
        (self.drift)(x)
    }

    pub fn diffusion(&self, x: &Vector) -> Matrix {
        (self.diffusion)(x)
    }

    /// Analytic `∂b̃ⁱ/∂xʲ` when supplied, otherwise central differences.
    pub fn drift_jacobian(&self, x: &Vector) -> Matrix {
        match &self.drift_jacobian {
            Some(f) => f(x),
            None => self.jacobian_in_region(x, |y| self.drift(y)),
        }
    }

    pub fn analytic_drift_jacobian(&self, x: &Vector) -> Option<Matrix> {
        self.drift_jacobian.as_ref().map(|f| f(x))
    }

    /// `∂σ/∂x_l`: analytic when supplied, zero for constant diffusion,
    /// otherwise central differences.
    pub fn diffusion_partials(&self, x: &Vector) -> Vec<Matrix> {
        if let Some(f) = &self.diffusion_partials {
            return f(x);
        }
        if self.constant_diffusion {
            return (0..self.dim).map(|_| Matrix::zeros(self.dim, self.dim)).collect();
        }
        fd_diffusion_partials(self, x)
    }

    pub fn analytic_diffusion_partials(&self, x: &Vector) -> Option<Vec<Matrix>> {
        self.diffusion_partials.as_ref().map(|f| f(x))
    }

    /// Checks the analytic derivative callbacks against central differences at
    /// each probe. The worst relative error must stay below `tolerance`.
    pub fn verify_derivatives(&self, probes: &[Vector], tolerance: f64) -> Result<()> {
        for x in probes {
            if let Some(jac) = self.analytic_drift_jacobian(x) {
                let numeric = fd::jacobian(x, |y| self.drift(y));
                let err = fd::relative_error(jac.as_slice(), numeric.as_slice());
                if !(err < tolerance) {
                    return Err(OmError::DerivativeMismatch {
                        what: "drift jacobian",
                        relative_error: err,
                    });
                }
            }
            if let Some(parts) = self.analytic_diffusion_partials(x) {
                if parts.len() != self.dim {
                    return Err(OmError::DimensionMismatch {
                        what: "diffusion partials",
                        expected: self.dim,
                        found: parts.len(),
                    });
                }
                let numeric = fd_diffusion_partials(self, x);
                let a: Vec<f64> = parts.iter().flat_map(|m| m.iter().copied()).collect();
                let b: Vec<f64> = numeric.iter().flat_map(|m| m.iter().copied()).collect();
                let err = fd::relative_error(&a, &b);
                if !(err < tolerance) {
                    return Err(OmError::DerivativeMismatch {
                        what: "diffusion partials",
                        relative_error: err,
                    });
                }
            }
        }
        Ok(())
    }
}

fn fd_diffusion_partials(sys: &SystemModel, x: &Vector) -> Vec<Matrix> {
    (0..sys.dim)
        .map(|l| {
            let h = fd::step(x[l]);
            let (p, m) = fd::shifted(x, l, h);
            (sys.diffusion(&p) - sys.diffusion(&m)) / (2.0 * h)
        })
        .collect()
}

/// Smallest eigenvalue of a symmetric matrix; exact for diagonal input.
pub fn min_symmetric_eigenvalue(a: &Matrix) -> f64 {
    let n = a.nrows();
    let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || a[(i, j)] == 0.0));
    if diagonal {
        return (0..n).map(|i| a[(i, i)]).fold(f64::INFINITY, f64::min);
    }
    a.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}
