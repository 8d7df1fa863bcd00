//! Post-solve diagnostics: Euler-Lagrange residual and the spread of the
//! Hamiltonian, which is a first integral of autonomous extremals.

use crate::error::{OmError, Result};
use crate::geometry::{path_velocities, LocalCost};
use crate::model::{SystemModel, Vector};
use crate::problem::ControlProblem;
use crate::trajectory::Trajectory;

/// Max over interior nodes of `|d/dt ∂L/∂ż − ∂L/∂z|`, every derivative by
/// central differences on the grid.
pub fn el_residual(sys: &SystemModel, traj: &Trajectory) -> Result<f64> {
    traj.validate()?;
    let n = traj.len();
    if n < 5 {
        return Err(OmError::DegenerateGrid(alloc::format!("{n} nodes, need at least 5")));
    }
    let h = traj.spacing();
    if h <= 0.0 {
        return Err(OmError::DegenerateGrid("zero-length horizon".into()));
    }
    let states = traj.states();
    let velocities = path_velocities(states, h);
    let momenta = states
        .iter()
        .zip(&velocities)
        .map(|(x, v)| Ok(LocalCost::at(sys, x)?.momentum(v)))
        .collect::<Result<alloc::vec::Vec<Vector>>>()?;
    let mut worst: f64 = 0.0;
    for i in 2..n - 2 {
        let dp = (&momenta[i + 1] - &momenta[i - 1]) / (2.0 * h);
        let v = &velocities[i];
        let dl = sys.gradient_in_region(&states[i], sys.geometry_gradient_step(), |y| {
            Ok::<_, OmError>(LocalCost::at(sys, y)?.lagrangian_velocity(v))
        })?;
        worst = worst.max((dp - dl).norm());
    }
    Ok(worst)
}

/// `max_t H − min_t H` along a trajectory with costates and controls.
pub fn hamiltonian_constancy(problem: &ControlProblem, traj: &Trajectory) -> Result<f64> {
    let (Some(p), Some(th)) = (traj.costates(), traj.controls()) else {
        return Err(OmError::DegenerateGrid(
            "costates and controls must be populated".into(),
        ));
    };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for ((x, p), th) in traj.states().iter().zip(p).zip(th) {
        let h = problem.hamiltonian(x, p, th)?;
        lo = lo.min(h);
        hi = hi.max(h);
    }
    Ok(hi - lo)
}
