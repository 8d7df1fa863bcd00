//! Turning a validated [`Config`] into core objects.

use std::path::Path;

use ompath_core::monte_carlo::{ReferenceMethod, SamplingConfig, TubeConfig};
use ompath_core::systems::{make_double_well, make_maier_stein, make_npz, NpzParams};
use ompath_core::{ControlProblem, InitialControl, SolverConfig, SystemModel, TerminalCost, Vector};

use crate::config::{Config, ReferenceKind, SystemBlock, TerminalKind};
use crate::error::CliError;
use crate::expr::custom_system;
use crate::io::read_trajectory;

/// NPZ parameters of a block, falling back to the defaults field by field.
pub fn npz_params(block: &SystemBlock) -> NpzParams {
    let mut p = NpzParams::default();
    if let SystemBlock::Npz(b) = block {
        p.big_d = b.big_d.unwrap_or(p.big_d);
        p.n0 = b.n0.unwrap_or(p.n0);
        p.a = b.a.unwrap_or(p.a);
        p.b = b.b.unwrap_or(p.b);
        p.alpha = b.alpha.unwrap_or(p.alpha);
        p.c = b.c.unwrap_or(p.c);
        p.d = b.d.unwrap_or(p.d);
        p.d1 = b.d1.unwrap_or(p.d1);
        p.beta = b.beta.unwrap_or(p.beta);
        p.d2 = b.d2.unwrap_or(p.d2);
        p.sigma = b.sigma.unwrap_or(p.sigma);
    }
    p
}

pub fn system(cfg: &Config) -> Result<SystemModel, CliError> {
    Ok(match &cfg.system {
        SystemBlock::DoubleWell(b) => make_double_well(b.sigma.unwrap_or(1.0))?,
        SystemBlock::MaierStein(b) => make_maier_stein(b.gamma.unwrap_or(1.0), b.epsilon.unwrap_or(0.0))?,
        SystemBlock::Npz(_) => make_npz(npz_params(&cfg.system))?,
        SystemBlock::Custom(b) => custom_system(b)?,
    })
}

pub fn vector(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

pub fn problem(cfg: &Config, system: SystemModel) -> Result<ControlProblem, CliError> {
    let p = cfg.problem();
    let terminal = match p.terminal_cost.unwrap_or(TerminalKind::Saturating) {
        TerminalKind::Saturating => TerminalCost::Saturating,
        TerminalKind::Quadratic => TerminalCost::Quadratic,
    };
    Ok(ControlProblem::new(
        system,
        vector(&p.x0),
        vector(&p.x_target),
        p.t0.unwrap_or(0.0),
        p.tf.unwrap_or(1.0),
        p.terminal_weight.unwrap_or(1.0),
    )?
    .with_terminal_cost(terminal))
}

/// Solver settings; a relative `initial_control_csv` is resolved against
/// `base`, the directory of the config file.
pub fn solver_config(cfg: &Config, base: &Path) -> Result<SolverConfig, CliError> {
    let s = cfg.solver();
    let d = SolverConfig::default();
    let n_nodes = s.n_nodes.unwrap_or(d.n_nodes);
    let initial_control = match &s.initial_control_csv {
        None => InitialControl::Zeros,
        Some(path) => {
            let path = base.join(path);
            let traj = read_trajectory(&path)?;
            let Some(controls) = traj.controls() else {
                return Err(CliError::Format {
                    path,
                    message: "no theta columns to start from".into(),
                });
            };
            if controls.len() != n_nodes {
                return Err(CliError::Format {
                    path,
                    message: format!("{} rows for solver.n_nodes = {n_nodes}", controls.len()),
                });
            }
            InitialControl::Grid(controls.to_vec())
        }
    };
    Ok(SolverConfig {
        n_nodes,
        max_iterations: s.max_iterations.unwrap_or(d.max_iterations),
        damping_eta: s.damping_eta.unwrap_or(d.damping_eta),
        cost_tolerance: s.cost_tolerance.unwrap_or(d.cost_tolerance),
        stationarity_tolerance: s.stationarity_tolerance.unwrap_or(d.stationarity_tolerance),
        initial_control,
    })
}

pub fn sampling_config(cfg: &Config) -> SamplingConfig {
    let m = cfg.mc();
    SamplingConfig {
        dt: m.dt.unwrap_or(1e-3),
        delta: m.delta.unwrap_or(0.1),
        attempts: m.attempts.unwrap_or(crate::config::DEFAULT_ATTEMPTS),
        seed: m.seed.unwrap_or(0),
        n_nodes: m.n_nodes.unwrap_or(101),
    }
}

pub fn tube_config(cfg: &Config) -> TubeConfig {
    let m = cfg.mc();
    TubeConfig {
        dt: m.dt.unwrap_or(1e-3),
        delta: m.tube_delta.unwrap_or(0.3),
        trials: m.tube_trials.unwrap_or(crate::config::DEFAULT_TUBE_TRIALS),
        seed: m.seed.unwrap_or(0),
    }
}

pub fn reference_method(kind: ReferenceKind) -> ReferenceMethod {
    match kind {
        ReferenceKind::MinAction => ReferenceMethod::MinAction,
        ReferenceKind::PerSliceMode => ReferenceMethod::PerSliceMode,
        ReferenceKind::PerSliceMedian => ReferenceMethod::PerSliceMedian,
    }
}

pub fn reference_name(method: ReferenceMethod) -> &'static str {
    match method {
        ReferenceMethod::MinAction => "min_action",
        ReferenceMethod::PerSliceMode => "per_slice_mode",
        ReferenceMethod::PerSliceMedian => "per_slice_median",
    }
}
