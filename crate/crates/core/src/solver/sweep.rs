//! Forward state sweep, backward costate sweep and pointwise Hamiltonian
//! maximisation. Both sweeps are classical RK4. Controls at half steps come
//! from four-point interpolation of the node values; the backward sweep takes
//! states at half steps from the cubic Hermite interpolant.

use alloc::vec::Vec;

use crate::error::{OmError, Result};
use crate::geometry::LocalCost;
use crate::model::{Matrix, Vector};
use crate::problem::ControlProblem;
use crate::trajectory::midpoints;

const BLOWUP: f64 = 1e8;

fn check_finite(v: &Vector, time: f64) -> Result<()> {
    if v.iter().all(|c| c.is_finite() && libm::fabs(*c) <= BLOWUP) {
        Ok(())
    } else {
        Err(OmError::NumericalBlowup { time })
    }
}

fn check_grid(problem: &ControlProblem, times: &[f64], rows: &[Vector], what: &'static str) -> Result<()> {
    if times.len() < 2 {
        return Err(OmError::DegenerateGrid(alloc::format!("{} nodes", times.len())));
    }
    if rows.len() != times.len() {
        return Err(OmError::DimensionMismatch {
            what,
            expected: times.len(),
            found: rows.len(),
        });
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != problem.dim()) {
        return Err(OmError::DimensionMismatch {
            what,
            expected: problem.dim(),
            found: bad.len(),
        });
    }
    Ok(())
}

/// Integrates `ẋ = b̃(x) + σ(x) θ(t)` from `x0` over the grid.
pub fn forward_sweep(problem: &ControlProblem, times: &[f64], controls: &[Vector]) -> Result<Vec<Vector>> {
    check_grid(problem, times, controls, "controls")?;
    let mut states = Vec::with_capacity(times.len());
    let mut x = problem.x0().clone();
    states.push(x.clone());
    let mids = midpoints(controls);
    for i in 0..times.len() - 1 {
        let h = times[i + 1] - times[i];
        let mid = &mids[i];
        let k1 = problem.dynamics(&x, &controls[i]);
        let k2 = problem.dynamics(&(&x + &k1 * (0.5 * h)), mid);
        let k3 = problem.dynamics(&(&x + &k2 * (0.5 * h)), mid);
        let k4 = problem.dynamics(&(&x + &k3 * h), &controls[i + 1]);
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        check_finite(&x, times[i + 1])?;
        states.push(x.clone());
    }
    Ok(states)
}

/// Cubic Hermite values of the state at interval midpoints, with node slopes
/// taken from the dynamics.
pub fn state_midpoints(problem: &ControlProblem, times: &[f64], states: &[Vector], controls: &[Vector]) -> Vec<Vector> {
    let slopes: Vec<Vector> = states
        .iter()
        .zip(controls)
        .map(|(x, th)| problem.dynamics(x, th))
        .collect();
    (0..times.len() - 1)
        .map(|i| {
            let h = times[i + 1] - times[i];
            (&states[i] + &states[i + 1]) * 0.5 + (&slopes[i] - &slopes[i + 1]) * (h / 8.0)
        })
        .collect()
}

/// Integrates `ṗ = −∇ₓH` backward from `p(tf) = −∇Φ(x(tf))`.
pub fn backward_sweep(
    problem: &ControlProblem,
    times: &[f64],
    states: &[Vector],
    controls: &[Vector],
) -> Result<Vec<Vector>> {
    check_grid(problem, times, states, "states")?;
    check_grid(problem, times, controls, "controls")?;
    let n = times.len();
    let mut costates = alloc::vec![Vector::zeros(problem.dim()); n];
    let mut p = -problem.terminal_gradient(&states[n - 1]);
    check_finite(&p, times[n - 1])?;
    costates[n - 1] = p.clone();
    // ∇ₓH is affine in p, so the expensive parts are evaluated once per
    // node and once per half step.
    let state_mids = state_midpoints(problem, times, states, controls);
    let control_mids = midpoints(controls);
    let at_nodes = states
        .iter()
        .zip(controls)
        .map(|(x, th)| problem.costate_linearization(x, th))
        .collect::<Result<Vec<_>>>()?;
    let at_mids = state_mids
        .iter()
        .zip(&control_mids)
        .map(|(x, th)| problem.costate_linearization(x, th))
        .collect::<Result<Vec<_>>>()?;
    let rate = |(a, dl): &(Matrix, Vector), p: &Vector| -> Vector { dl - a.tr_mul(p) };
    for i in (1..n).rev() {
        let h = times[i] - times[i - 1];
        let mid = &at_mids[i - 1];
        let k1 = rate(&at_nodes[i], &p);
        let k2 = rate(mid, &(&p - &k1 * (0.5 * h)));
        let k3 = rate(mid, &(&p - &k2 * (0.5 * h)));
        let k4 = rate(&at_nodes[i - 1], &(&p - &k3 * h));
        p -= (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        check_finite(&p, times[i - 1])?;
        costates[i - 1] = p.clone();
    }
    Ok(costates)
}

const ASCENT_MAX_STEPS: usize = 1000;

/// Pointwise maximiser of `H(x, p, ·)`.
///
/// For the Onsager-Machlup cost `σᵀVσ = I`, so `H` is a concave quadratic in
/// θ with Hessian `−I` and the maximiser is `θ* = σᵀp − σᵀVΔ`. A custom
/// running cost falls back to backtracking gradient ascent until
/// `|∇θH| < tolerance`.
pub fn maximize_hamiltonian(problem: &ControlProblem, x: &Vector, p: &Vector, tolerance: f64) -> Result<Vector> {
    if problem.is_quadratic() {
        let local = LocalCost::at(problem.system(), x)?;
        let st = local.sigma.transpose();
        return Ok(&st * p - &st * (&local.metric_v * &local.offset));
    }
    let sigma = problem.system().diffusion(x);
    let mut theta = sigma.transpose() * p;
    let mut value = problem.hamiltonian(x, p, &theta)?;
    let mut alpha = 1.0;
    for _ in 0..ASCENT_MAX_STEPS {
        let g = problem.hamiltonian_theta_gradient(x, p, &theta)?;
        let gn = g.norm();
        if gn < tolerance {
            return Ok(theta);
        }
        loop {
            let trial = &theta + &g * alpha;
            let v = problem.hamiltonian(x, p, &trial)?;
            if v.is_finite() && v >= value + 1e-4 * alpha * gn * gn {
                theta = trial;
                value = v;
                alpha = (alpha * 2.0).min(1e6);
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-14 {
                return Err(OmError::AscentStall { gradient_norm: gn });
            }
        }
    }
    let gradient_norm = problem.hamiltonian_theta_gradient(x, p, &theta)?.norm();
    if gradient_norm < tolerance {
        Ok(theta)
    } else {
        Err(OmError::AscentStall { gradient_norm })
    }
}
