//! Damped method of successive approximations for the extended Hamiltonian
//! system: forward state sweep, backward costate sweep, pointwise Hamiltonian
//! maximisation, relaxed control update.

mod diagnostics;
mod sweep;

use alloc::{format, vec::Vec};

pub use diagnostics::{el_residual, hamiltonian_constancy};
pub use sweep::{backward_sweep, forward_sweep, maximize_hamiltonian, state_midpoints};

use crate::error::{OmError, Result};
use crate::model::Vector;
use crate::problem::ControlProblem;
use crate::trajectory::{midpoints, uniform_grid, Trajectory};

/// Smallest relaxation factor tried before a step is given up.
pub const MIN_DAMPING: f64 = 1e-3;
/// Growth of η after an accepted step.
pub const RECOVERY: f64 = 1.25;
/// Slack allowed on the monotone-cost check.
pub const COST_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Default)]
pub enum InitialControl {
    #[default]
    Zeros,
    /// One control vector per grid node.
    Grid(Vec<Vector>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub n_nodes: usize,
    pub max_iterations: usize,
    pub damping_eta: f64,
    pub cost_tolerance: f64,
    pub stationarity_tolerance: f64,
    pub initial_control: InitialControl,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n_nodes: 201,
            max_iterations: 500,
            damping_eta: 0.5,
            cost_tolerance: 1e-8,
            stationarity_tolerance: 1e-6,
            initial_control: InitialControl::Zeros,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_nodes < 2 {
            return Err(OmError::InvalidConfig(format!("n_nodes = {} < 2", self.n_nodes)));
        }
        if !(self.damping_eta > 0.0 && self.damping_eta <= 1.0) {
            return Err(OmError::InvalidConfig(format!(
                "damping_eta = {} outside (0, 1]",
                self.damping_eta
            )));
        }
        if !(self.cost_tolerance > 0.0) || !(self.stationarity_tolerance > 0.0) {
            return Err(OmError::InvalidConfig("tolerances must be positive".into()));
        }
        if let InitialControl::Grid(g) = &self.initial_control {
            if g.len() != self.n_nodes {
                return Err(OmError::InvalidConfig(format!(
                    "initial control grid has {} rows for {} nodes",
                    g.len(),
                    self.n_nodes
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// Relative cost change and max |∇θH| both under tolerance.
    StationarityTol,
    /// The cost stopped decreasing (minimal damping rejected, or the relative
    /// change fell under tolerance) before stationarity was reached.
    CostTol,
    MaxIter,
    Diverged,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::StationarityTol => "stationarity_tol",
            StopReason::CostTol => "cost_tol",
            StopReason::MaxIter => "max_iter",
            StopReason::Diverged => "diverged",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub cost: f64,
    /// Max over nodes of `|∇θH|`.
    pub grad_norm: f64,
    /// `|x(tf) − x_target|`.
    pub endpoint_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverReport {
    pub converged: bool,
    pub iterations: Vec<IterationRecord>,
    pub solution: Trajectory,
    pub stop_reason: StopReason,
}

impl SolverReport {
    pub fn last(&self) -> &IterationRecord {
        &self.iterations[self.iterations.len() - 1]
    }
}

/// The solver's `J`: per-interval Simpson rule on the same half-step states
/// and controls the sweeps use, plus the terminal cost.
pub fn discrete_cost(problem: &ControlProblem, times: &[f64], states: &[Vector], controls: &[Vector]) -> Result<f64> {
    let x_mid = state_midpoints(problem, times, states, controls);
    let th_mid = midpoints(controls);
    let mut integral = 0.0;
    for i in 0..times.len() - 1 {
        let h = times[i + 1] - times[i];
        let ends =
            problem.running_cost(&states[i], &controls[i])? + problem.running_cost(&states[i + 1], &controls[i + 1])?;
        integral += (ends + 4.0 * problem.running_cost(&x_mid[i], &th_mid[i])?) * (h / 6.0);
    }
    Ok(integral + problem.terminal_cost(&states[states.len() - 1]))
}

/// Runs the damped MSA to a stop criterion and returns the full history.
///
/// Each accepted update is `θ ← θ + η (θ̂ − θ)`; a trial that raises `J` (or
/// blows up) halves η, down to [`MIN_DAMPING`]. η also halves whenever the
/// max-node `|∇θH|` grows between iterations, and recovers by a factor
/// [`RECOVERY`] toward its configured value after every acceptance.
pub fn msa_solve(problem: &ControlProblem, config: &SolverConfig) -> Result<SolverReport> {
    config.validate()?;
    let d = problem.dim();
    let times = uniform_grid(problem.t0(), problem.tf(), config.n_nodes);
    let mut controls = match &config.initial_control {
        InitialControl::Zeros => alloc::vec![Vector::zeros(d); config.n_nodes],
        InitialControl::Grid(g) => {
            if let Some(bad) = g.iter().find(|v| v.len() != d) {
                return Err(OmError::DimensionMismatch {
                    what: "initial control",
                    expected: d,
                    found: bad.len(),
                });
            }
            g.clone()
        }
    };
    let mut states = match forward_sweep(problem, &times, &controls) {
        Ok(s) => s,
        Err(OmError::NumericalBlowup { .. }) => {
            return Err(OmError::Diverged {
                eta: config.damping_eta,
            })
        }
        Err(e) => return Err(e),
    };
    let mut cost = discrete_cost(problem, &times, &states, &controls)?;
    let mut eta = config.damping_eta;
    let mut last_change: Option<f64> = None;
    let mut previous_grad: Option<f64> = None;
    let mut iterations = Vec::new();

    let stop_reason = loop {
        let k = iterations.len();
        let costates = backward_sweep(problem, &times, &states, &controls)?;
        let mut targets = Vec::with_capacity(controls.len());
        let mut grad_norm: f64 = 0.0;
        for ((x, p), th) in states.iter().zip(&costates).zip(&controls) {
            let best = maximize_hamiltonian(problem, x, p, config.stationarity_tolerance)?;
            let g = if problem.is_quadratic() {
                (&best - th).norm()
            } else {
                problem.hamiltonian_theta_gradient(x, p, th)?.norm()
            };
            grad_norm = grad_norm.max(g);
            targets.push(best);
        }
        let endpoint_error = (&states[states.len() - 1] - problem.x_target()).norm();
        iterations.push(IterationRecord {
            k,
            cost,
            grad_norm,
            endpoint_error,
        });
        let solution = || -> Result<Trajectory> {
            Trajectory::new(times.clone(), states.clone())?
                .with_costates(costates.clone())?
                .with_controls(controls.clone())
        };

        // A growing stationarity residual flags an unstable relaxation mode
        // that the cost test cannot see once J is flat.
        if previous_grad.is_some_and(|g| grad_norm > g) {
            eta = (eta * 0.5).max(MIN_DAMPING);
        }
        previous_grad = Some(grad_norm);

        let cost_settled = last_change.is_some_and(|c| c <= config.cost_tolerance);
        if grad_norm <= config.stationarity_tolerance && (cost_settled || k > 0 && grad_norm == 0.0) {
            break (StopReason::StationarityTol, solution()?);
        }
        if k >= config.max_iterations {
            break (StopReason::MaxIter, solution()?);
        }

        // Relaxed update with cost-increase rejection.
        let accepted = loop {
            let trial: Vec<Vector> = controls
                .iter()
                .zip(&targets)
                .map(|(th, best)| th + (best - th) * eta)
                .collect();
            let outcome = match forward_sweep(problem, &times, &trial) {
                Ok(s) => Some((discrete_cost(problem, &times, &s, &trial)?, s)),
                Err(OmError::NumericalBlowup { .. }) => None,
                Err(e) => return Err(e),
            };
            match outcome {
                Some((c, s)) if c.is_finite() && c <= cost + COST_SLACK => {
                    break Some((trial, s, c));
                }
                Some(_) => {}
                None if eta <= MIN_DAMPING => return Err(OmError::Diverged { eta }),
                None => {}
            }
            if eta <= MIN_DAMPING {
                break None;
            }
            eta = (eta * 0.5).max(MIN_DAMPING);
        };
        match accepted {
            Some((trial, s, c)) => {
                last_change = Some(libm::fabs(c - cost) / libm::fabs(cost).max(1.0));
                controls = trial;
                states = s;
                cost = c;
                eta = (eta * RECOVERY).min(config.damping_eta);
            }
            None => break (StopReason::CostTol, solution()?),
        }
    };

    let (stop_reason, solution) = stop_reason;
    Ok(SolverReport {
        converged: stop_reason == StopReason::StationarityTol,
        iterations,
        solution,
        stop_reason,
    })
}
