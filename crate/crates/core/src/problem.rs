//! Fixed-time Bolza problem
//!
//! ```text
//! minimise  J[θ] = ∫ L(x, θ) dt + Φ(x(tf))
//! subject   ẋ = b̃(x) + σ(x) θ,  x(t0) = x0
//! ```
//!
//! with `L` the Onsager-Machlup Lagrangian in control form, and the
//! Hamiltonian `H(x, p, θ) = pᵀ f(x, θ) − L(x, θ)`.

use alloc::sync::Arc;

use crate::error::{OmError, Result};
use crate::fd;
use crate::geometry::LocalCost;
use crate::model::{Matrix, SystemModel, Vector};
use crate::trajectory::Trajectory;

/// Terminal penalty, always scaled by the problem's `terminal_weight`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TerminalCost {
    /// `r / (r + 1)` with `r = |x − x_target|²`; bounded by one.
    #[default]
    Saturating,
    /// `½ |x − x_target|²`.
    Quadratic,
}

pub type RunningCostFn = Arc<dyn Fn(&Vector, &Vector) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct ControlProblem {
    system: SystemModel,
    x0: Vector,
    x_target: Vector,
    t0: f64,
    tf: f64,
    terminal_weight: f64,
    terminal: TerminalCost,
    custom_running_cost: Option<RunningCostFn>,
}

impl core::fmt::Debug for ControlProblem {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ControlProblem")
            .field("system", &self.system)
            .field("x0", &self.x0.as_slice())
            .field("x_target", &self.x_target.as_slice())
            .field("t0", &self.t0)
            .field("tf", &self.tf)
            .field("terminal_weight", &self.terminal_weight)
            .field("terminal", &self.terminal)
            .field("custom_running_cost", &self.custom_running_cost.is_some())
            .finish()
    }
}

impl ControlProblem {
    pub fn new(
        system: SystemModel,
        x0: Vector,
        x_target: Vector,
        t0: f64,
        tf: f64,
        terminal_weight: f64,
    ) -> Result<Self> {
        let d = system.dim();
        for (what, v) in [("x0", &x0), ("x_target", &x_target)] {
            if v.len() != d {
                return Err(OmError::DimensionMismatch {
                    what,
                    expected: d,
                    found: v.len(),
                });
            }
            if !v.iter().all(|c| c.is_finite()) {
                return Err(OmError::InvalidParams(alloc::format!("{what} is not finite")));
            }
        }
        if !(tf > t0) || !t0.is_finite() || !tf.is_finite() {
            return Err(OmError::InvalidHorizon { t0, tf });
        }
        if !(terminal_weight >= 0.0) || !terminal_weight.is_finite() {
            return Err(OmError::InvalidParams(alloc::format!(
                "terminal weight must be nonnegative, got {terminal_weight}"
            )));
        }
        Ok(Self {
            system,
            x0,
            x_target,
            t0,
            tf,
            terminal_weight,
            terminal: TerminalCost::Saturating,
            custom_running_cost: None,
        })
    }

    pub fn with_terminal_cost(mut self, terminal: TerminalCost) -> Self {
        self.terminal = terminal;
        self
    }

    /// Replaces the Onsager-Machlup running cost. The Hamiltonian is then no
    /// longer known to be quadratic in θ and is maximised by gradient ascent.
    pub fn with_running_cost(mut self, cost: impl Fn(&Vector, &Vector) -> f64 + Send + Sync + 'static) -> Self {
        self.custom_running_cost = Some(Arc::new(cost));
        self
    }

    pub fn system(&self) -> &SystemModel {
        &self.system
    }

    pub fn x0(&self) -> &Vector {
        &self.x0
    }

    pub fn x_target(&self) -> &Vector {
        &self.x_target
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn tf(&self) -> f64 {
        self.tf
    }

    pub fn terminal_weight(&self) -> f64 {
        self.terminal_weight
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    pub fn is_quadratic(&self) -> bool {
        self.custom_running_cost.is_none()
    }

    /// `f(x, θ) = b̃(x) + σ(x) θ`.
    pub fn dynamics(&self, x: &Vector, theta: &Vector) -> Vector {
        self.system.drift(x) + self.system.diffusion(x) * theta
    }

    pub fn terminal_cost(&self, x: &Vector) -> f64 {
        let r = (x - &self.x_target).norm_squared();
        self.terminal_weight
            * match self.terminal {
                TerminalCost::Saturating => r / (r + 1.0),
                TerminalCost::Quadratic => 0.5 * r,
            }
    }

    pub fn terminal_gradient(&self, x: &Vector) -> Vector {
        let e = x - &self.x_target;
        match self.terminal {
            TerminalCost::Saturating => {
                let r = e.norm_squared();
                e * (2.0 * self.terminal_weight / ((r + 1.0) * (r + 1.0)))
            }
            TerminalCost::Quadratic => e * self.terminal_weight,
        }
    }

    pub fn running_cost(&self, x: &Vector, theta: &Vector) -> Result<f64> {
        match &self.custom_running_cost {
            Some(cost) => Ok(cost(x, theta)),
            None => Ok(LocalCost::at(&self.system, x)?.lagrangian(theta)),
        }
    }

    pub fn hamiltonian(&self, x: &Vector, p: &Vector, theta: &Vector) -> Result<f64> {
        Ok(p.dot(&self.dynamics(x, theta)) - self.running_cost(x, theta)?)
    }

    /// `∇θ H = σᵀ p − ∇θ L`; closed form for the OM cost.
    pub fn hamiltonian_theta_gradient(&self, x: &Vector, p: &Vector, theta: &Vector) -> Result<Vector> {
        match &self.custom_running_cost {
            None => {
                let local = LocalCost::at(&self.system, x)?;
                Ok(local.sigma.transpose() * p - local.lagrangian_theta_gradient(theta))
            }
            Some(cost) => {
                let sigma = self.system.diffusion(x);
                let g = fd::gradient(theta, fd::step, |th| Ok::<_, OmError>(cost(x, th)))?;
                Ok(sigma.transpose() * p - g)
            }
        }
    }

    /// The p-independent parts of `∇ₓH = Aᵀp − ∇ₓL`: `A = ∂f/∂x` at
    /// `(x, θ)` and the running-cost gradient. `A` is analytic when the system
    /// carries drift and diffusion derivatives; the running cost (which holds
    /// div b and R) is always differenced, with a wider step when its
    /// geometry is itself differenced.
    pub fn costate_linearization(&self, x: &Vector, theta: &Vector) -> Result<(Matrix, Vector)> {
        let sys = &self.system;
        let analytic = sys.has_drift_jacobian() && (sys.has_diffusion_partials() || sys.is_constant_diffusion());
        let a = if analytic {
            let mut a = sys.drift_jacobian(x);
            if !sys.is_constant_diffusion() {
                for (j, ds) in sys.diffusion_partials(x).iter().enumerate() {
                    let col = ds * theta;
                    for i in 0..a.nrows() {
                        a[(i, j)] += col[i];
                    }
                }
            }
            a
        } else {
            sys.jacobian_in_region(x, |y| self.dynamics(y, theta))
        };
        let dl = sys.gradient_in_region(x, sys.geometry_gradient_step(), |y| self.running_cost(y, theta))?;
        Ok((a, dl))
    }

    /// `∇ₓ H`, assembled from [`ControlProblem::costate_linearization`].
    pub fn hamiltonian_x_gradient(&self, x: &Vector, p: &Vector, theta: &Vector) -> Result<Vector> {
        let (a, dl) = self.costate_linearization(x, theta)?;
        Ok(a.transpose() * p - dl)
    }

    pub fn hamiltonian_gradients(&self, x: &Vector, p: &Vector, theta: &Vector) -> Result<(Vector, Vector)> {
        Ok((
            self.hamiltonian_x_gradient(x, p, theta)?,
            self.hamiltonian_theta_gradient(x, p, theta)?,
        ))
    }

    /// `J = ∫ L dt + Φ(x(tf))` by the trapezoidal rule on the trajectory grid.
    pub fn total_cost(&self, traj: &Trajectory) -> Result<f64> {
        traj.validate()?;
        let controls = traj
            .controls()
            .ok_or_else(|| OmError::DegenerateGrid("controls are not populated".into()))?;
        let h = traj.spacing();
        let n = traj.len();
        let mut integral = 0.0;
        if h > 0.0 {
            for (i, (x, th)) in traj.states().iter().zip(controls).enumerate() {
                let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                integral += w * self.running_cost(x, th)?;
            }
        }
        Ok(integral * h + self.terminal_cost(traj.final_state()))
    }
}
