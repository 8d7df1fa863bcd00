//! The four commands. Each writes its artifacts and returns whether the run
//! reached its goal; errors propagate as [`CliError`].

use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use ompath_core::geometry::{geometry_point, om_action};
use ompath_core::monte_carlo::{reference_path, sample_transitions, tube_probability, ReferenceMethod};
use ompath_core::solver::{el_residual, hamiltonian_constancy, msa_solve};
use ompath_core::{ControlProblem, OmError, SolverReport, Trajectory, Vector};
use serde::Serialize;

use crate::build;
use crate::config::{Command, Config, Format};
use crate::error::CliError;
use crate::io;

/// Where a run writes and what it was started with.
#[derive(Clone, Debug)]
pub struct RunContext {
    pub output_dir: PathBuf,
    /// Directory that relative paths inside the config refer to.
    pub config_dir: PathBuf,
    pub defaults_applied: Vec<String>,
    pub print_table: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub converged: bool,
    pub files: Vec<PathBuf>,
}

#[derive(Clone, Debug, Serialize)]
pub struct IterationEntry {
    pub k: usize,
    pub cost: f64,
    pub grad_norm: f64,
    pub endpoint_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Diagnostics {
    pub el_residual: Option<f64>,
    pub hamiltonian_spread: f64,
    pub terminal_costate_residual: f64,
    pub endpoint_error: f64,
    pub total_cost: f64,
    pub om_action: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub command: Command,
    pub system: String,
    pub config_echo: String,
    pub defaults_applied: Vec<String>,
    pub iterations: Vec<IterationEntry>,
    pub stop_reason: String,
    pub converged: bool,
    pub diagnostics: Diagnostics,
    pub wall_time_seconds: f64,
    pub seed: Option<u64>,
}

pub fn run(cfg: &Config, ctx: &RunContext) -> Result<Outcome, CliError> {
    match cfg.command() {
        Command::Solve => solve(cfg, ctx),
        Command::Sample => sample(cfg, ctx),
        Command::Verify => verify(cfg, ctx),
        Command::Geometry => geometry(cfg, ctx),
    }
}

struct Solved {
    problem: ControlProblem,
    report: SolverReport,
    summary: SolveReport,
}

fn terminal_costate_residual(problem: &ControlProblem, traj: &Trajectory) -> f64 {
    let p = traj.costates().expect("solver fills costates");
    (&p[p.len() - 1] + problem.terminal_gradient(traj.final_state())).amax()
}

fn solve_problem(cfg: &Config, ctx: &RunContext, started: Instant) -> Result<Solved, CliError> {
    let system = build::system(cfg)?;
    let problem = build::problem(cfg, system)?;
    let config = build::solver_config(cfg, &ctx.config_dir)?;
    info!(
        "solving {} on [{}, {}] with {} nodes",
        problem.system().label(),
        problem.t0(),
        problem.tf(),
        config.n_nodes
    );
    let report = msa_solve(&problem, &config)?;
    let last = report.last();
    info!(
        "{} after {} iterations: J = {:.10e}, max|∇θH| = {:.3e}, endpoint error = {:.3e}",
        report.stop_reason.as_str(),
        last.k,
        last.cost,
        last.grad_norm,
        last.endpoint_error
    );
    let traj = &report.solution;
    let el = match el_residual(problem.system(), traj) {
        Ok(v) => Some(v),
        Err(e) => {
            warn!("Euler-Lagrange residual unavailable: {e}");
            None
        }
    };
    let diagnostics = Diagnostics {
        el_residual: el,
        hamiltonian_spread: hamiltonian_constancy(&problem, traj)?,
        terminal_costate_residual: terminal_costate_residual(&problem, traj),
        endpoint_error: last.endpoint_error,
        total_cost: problem.total_cost(traj)?,
        om_action: om_action(problem.system(), traj)?,
    };
    let summary = SolveReport {
        command: cfg.command(),
        system: problem.system().label().to_string(),
        config_echo: cfg.to_toml(),
        defaults_applied: ctx.defaults_applied.clone(),
        iterations: report
            .iterations
            .iter()
            .map(|r| IterationEntry {
                k: r.k,
                cost: r.cost,
                grad_norm: r.grad_norm,
                endpoint_error: r.endpoint_error,
            })
            .collect(),
        stop_reason: report.stop_reason.as_str().to_string(),
        converged: report.converged,
        diagnostics,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        seed: cfg.seed(),
    };
    Ok(Solved {
        problem,
        report,
        summary,
    })
}

fn write_solution(cfg: &Config, ctx: &RunContext, solved: &Solved, files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    if cfg.writes(Format::Csv) {
        let path = ctx.output_dir.join("trajectory.csv");
        io::write_trajectory(&path, &solved.report.solution)?;
        files.push(path);
    }
    if cfg.writes(Format::Json) {
        let path = ctx.output_dir.join("report.json");
        io::write_json(&path, &solved.summary)?;
        files.push(path);
    }
    Ok(())
}

fn solve(cfg: &Config, ctx: &RunContext) -> Result<Outcome, CliError> {
    let started = Instant::now();
    let solved = solve_problem(cfg, ctx, started)?;
    let mut files = Vec::new();
    write_solution(cfg, ctx, &solved, &mut files)?;
    Ok(Outcome {
        converged: solved.report.converged,
        files,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ReferenceEntry {
    pub method: String,
    pub file: Option<String>,
    pub om_action: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleSummary {
    pub command: Command,
    pub system: String,
    pub config_echo: String,
    pub defaults_applied: Vec<String>,
    pub attempts: usize,
    pub accepted: usize,
    pub acceptance_rate: f64,
    pub delta: f64,
    pub dt: f64,
    pub n_nodes: usize,
    pub references: Vec<ReferenceEntry>,
    pub wall_time_seconds: f64,
    pub seed: u64,
}

const METHODS: [ReferenceMethod; 3] = [
    ReferenceMethod::MinAction,
    ReferenceMethod::PerSliceMode,
    ReferenceMethod::PerSliceMedian,
];

struct Sampled {
    summary: SampleSummary,
    references: Vec<(ReferenceMethod, Trajectory)>,
}

fn sample_ensemble(cfg: &Config, ctx: &RunContext, files: &mut Vec<PathBuf>) -> Result<Sampled, CliError> {
    let started = Instant::now();
    let system = build::system(cfg)?;
    let p = cfg.problem();
    let sampling = build::sampling_config(cfg);
    let (t0, tf) = (p.t0.unwrap_or(0.0), p.tf.unwrap_or(1.0));
    info!(
        "sampling {} attempts of {} (dt = {}, delta = {}, seed = {})",
        sampling.attempts,
        system.label(),
        sampling.dt,
        sampling.delta,
        sampling.seed
    );
    let mut summary = SampleSummary {
        command: cfg.command(),
        system: system.label().to_string(),
        config_echo: cfg.to_toml(),
        defaults_applied: ctx.defaults_applied.clone(),
        attempts: sampling.attempts,
        accepted: 0,
        acceptance_rate: 0.0,
        delta: sampling.delta,
        dt: sampling.dt,
        n_nodes: sampling.n_nodes,
        references: Vec::new(),
        wall_time_seconds: 0.0,
        seed: sampling.seed,
    };
    let mut references = Vec::new();
    match sample_transitions(
        &system,
        &build::vector(&p.x0),
        &build::vector(&p.x_target),
        t0,
        tf,
        &sampling,
    ) {
        Ok(ensemble) => {
            summary.accepted = ensemble.accepted();
            summary.acceptance_rate = ensemble.acceptance_rate();
            info!("{} of {} paths accepted", ensemble.accepted(), ensemble.attempts());
            if cfg.writes(Format::Csv) {
                let path = ctx.output_dir.join("ensemble.csv");
                io::write_ensemble(&path, &ensemble)?;
                files.push(path);
            }
            for method in METHODS {
                let reference = reference_path(&ensemble, method, &system)?;
                let name = build::reference_name(method);
                let file = if cfg.writes(Format::Csv) {
                    let path = ctx.output_dir.join(format!("reference_{name}.csv"));
                    io::write_trajectory(&path, &reference)?;
                    let file = path.file_name().map(|f| f.to_string_lossy().into_owned());
                    files.push(path);
                    file
                } else {
                    None
                };
                summary.references.push(ReferenceEntry {
                    method: name.to_string(),
                    file,
                    om_action: om_action(&system, &reference)?,
                });
                references.push((method, reference));
            }
        }
        Err(OmError::NoTransitions { attempts }) => warn!("no transitions in {attempts} attempts"),
        Err(e) => return Err(e.into()),
    }
    summary.wall_time_seconds = started.elapsed().as_secs_f64();
    Ok(Sampled { summary, references })
}

fn sample(cfg: &Config, ctx: &RunContext) -> Result<Outcome, CliError> {
    let mut files = Vec::new();
    let sampled = sample_ensemble(cfg, ctx, &mut files)?;
    if cfg.writes(Format::Json) {
        let path = ctx.output_dir.join("sample_summary.json");
        io::write_json(&path, &sampled.summary)?;
        files.push(path);
    }
    Ok(Outcome {
        converged: sampled.summary.accepted > 0,
        files,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ReferenceComparison {
    pub method: String,
    pub sup_distance: f64,
    pub om_action: f64,
    /// Reference action minus the action of the solver's path.
    pub action_gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TubeComparison {
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    pub msa_path: f64,
    pub straight_line: f64,
    pub difference: f64,
    pub standard_error: f64,
    /// `difference / standard_error`.
    pub z: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Comparison {
    pub command: Command,
    pub system: String,
    pub config_echo: String,
    pub defaults_applied: Vec<String>,
    pub stop_reason: String,
    pub converged: bool,
    pub endpoint_error: f64,
    pub msa_om_action: f64,
    pub accepted: usize,
    pub acceptance_rate: f64,
    /// The configured reference method.
    pub reference: String,
    pub sup_distance: Option<f64>,
    pub action_gap: Option<f64>,
    pub references: Vec<ReferenceComparison>,
    pub tube: TubeComparison,
    pub wall_time_seconds: f64,
    pub seed: u64,
}

fn verify(cfg: &Config, ctx: &RunContext) -> Result<Outcome, CliError> {
    let started = Instant::now();
    let solved = solve_problem(cfg, ctx, started)?;
    let mut files = Vec::new();
    write_solution(cfg, ctx, &solved, &mut files)?;
    let sampled = sample_ensemble(cfg, ctx, &mut files)?;

    let problem = &solved.problem;
    let system = problem.system();
    let msa = &solved.report.solution;
    let msa_action = om_action(system, msa)?;
    let references = sampled
        .references
        .iter()
        .map(|(m, r)| {
            let a = om_action(system, r)?;
            Ok(ReferenceComparison {
                method: build::reference_name(*m).to_string(),
                sup_distance: msa.sup_distance(r),
                om_action: a,
                action_gap: a - msa_action,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let chosen = build::reference_name(build::reference_method(
        cfg.mc().reference.unwrap_or(crate::config::ReferenceKind::MinAction),
    ));
    let picked = references.iter().find(|r| r.method == chosen);

    // Both tubes see the same noise, so the difference is a paired estimate.
    let tube = build::tube_config(cfg);
    let line = {
        let (a, b) = (problem.x0().clone(), problem.x_target().clone());
        let (t0, tf) = (problem.t0(), problem.tf());
        Trajectory::from_fn(t0, tf, msa.len(), |t| {
            let s = (t - t0) / (tf - t0);
            &a + (&b - &a) * s
        })?
    };
    info!("tube estimates: {} trials each, delta = {}", tube.trials, tube.delta);
    let p_msa = tube_probability(system, msa, problem.x0(), problem.t0(), problem.tf(), &tube)?;
    let p_line = tube_probability(system, &line, problem.x0(), problem.t0(), problem.tf(), &tube)?;
    let n = tube.trials as f64;
    let standard_error = ((p_msa * (1.0 - p_msa) + p_line * (1.0 - p_line)) / n).sqrt();
    let difference = p_msa - p_line;
    let z = if standard_error > 0.0 {
        difference / standard_error
    } else if difference == 0.0 {
        0.0
    } else {
        difference.signum() * f64::INFINITY
    };

    let comparison = Comparison {
        command: cfg.command(),
        system: system.label().to_string(),
        config_echo: cfg.to_toml(),
        defaults_applied: ctx.defaults_applied.clone(),
        stop_reason: solved.report.stop_reason.as_str().to_string(),
        converged: solved.report.converged,
        endpoint_error: solved.report.last().endpoint_error,
        msa_om_action: msa_action,
        accepted: sampled.summary.accepted,
        acceptance_rate: sampled.summary.acceptance_rate,
        reference: chosen.to_string(),
        sup_distance: picked.map(|r| r.sup_distance),
        action_gap: picked.map(|r| r.action_gap),
        references,
        tube: TubeComparison {
            delta: tube.delta,
            trials: tube.trials,
            seed: tube.seed,
            msa_path: p_msa,
            straight_line: p_line,
            difference,
            standard_error,
            z: if z.is_finite() { z } else { f64::MAX.copysign(z) },
        },
        wall_time_seconds: started.elapsed().as_secs_f64(),
        seed: sampled.summary.seed,
    };
    if let Some(d) = comparison.sup_distance {
        info!("sup distance to the {chosen} reference: {d:.4}");
    }
    info!("tube probabilities: solver path {p_msa:.5}, straight line {p_line:.5} (z = {z:.2})");
    if cfg.writes(Format::Json) {
        let path = ctx.output_dir.join("sample_summary.json");
        io::write_json(&path, &sampled.summary)?;
        files.push(path);
    }
    let path = ctx.output_dir.join("comparison.json");
    io::write_json(&path, &comparison)?;
    files.push(path);
    Ok(Outcome {
        converged: solved.report.converged && sampled.summary.accepted > 0,
        files,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GeometryEntry {
    pub x: Vec<f64>,
    /// Rows of `V = (σσᵀ)⁻¹`.
    pub metric: Vec<Vec<f64>>,
    /// `christoffel[i][l][j] = Γⁱ_lj`.
    pub christoffel: Vec<Vec<Vec<f64>>>,
    pub drift: Vec<f64>,
    pub modified_drift: Vec<f64>,
    pub divergence: f64,
    pub scalar_curvature: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GeometryReport {
    pub command: Command,
    pub system: String,
    pub config_echo: String,
    pub defaults_applied: Vec<String>,
    pub points: Vec<GeometryEntry>,
}

fn rows(m: &ompath_core::Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn list(v: &Vector) -> Vec<f64> {
    v.iter().copied().collect()
}

pub fn geometry_entries(cfg: &Config) -> Result<(String, Vec<GeometryEntry>), CliError> {
    let system = build::system(cfg)?;
    let points = &cfg.geometry.as_ref().expect("validated config has points").points;
    let d = system.dim();
    let entries = points
        .iter()
        .map(|p| {
            let x = build::vector(p);
            let g = geometry_point(&system, &x)?;
            Ok(GeometryEntry {
                x: p.clone(),
                metric: rows(&g.metric_v),
                christoffel: (0..d)
                    .map(|i| {
                        (0..d)
                            .map(|l| (0..d).map(|j| g.christoffel.get(i, l, j)).collect())
                            .collect()
                    })
                    .collect(),
                drift: list(&system.drift(&x)),
                modified_drift: list(&g.modified_drift_b),
                divergence: g.divergence_b,
                scalar_curvature: g.scalar_curvature_r,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok((system.label().to_string(), entries))
}

fn geometry_csv(entries: &[GeometryEntry], path: &Path) -> Result<Vec<u8>, CliError> {
    let d = entries.first().map_or(0, |e| e.x.len());
    let mut header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    for i in 1..=d {
        header.extend((1..=d).map(|j| format!("V{i}{j}")));
    }
    for i in 1..=d {
        for l in 1..=d {
            header.extend((1..=d).map(|j| format!("Gamma{i}_{l}{j}")));
        }
    }
    header.extend((1..=d).map(|i| format!("b{i}")));
    header.push("div_b".into());
    header.push("R".into());
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Format {
        path: path.into(),
        message: e.to_string(),
    };
    w.write_record(&header).map_err(fail)?;
    for e in entries {
        let mut row: Vec<f64> = e.x.clone();
        row.extend(e.metric.iter().flatten());
        row.extend(e.christoffel.iter().flatten().flatten());
        row.extend(&e.modified_drift);
        row.push(e.divergence);
        row.push(e.scalar_curvature);
        w.write_record(row.iter().map(|v| io::number(*v))).map_err(fail)?;
    }
    w.into_inner().map_err(|e| CliError::Format {
        path: path.into(),
        message: e.to_string(),
    })
}

fn print_geometry(entries: &[GeometryEntry]) {
    for e in entries {
        println!("x = {:?}", e.x);
        for (i, row) in e.metric.iter().enumerate() {
            println!("  V[{}] = {:?}", i + 1, row);
        }
        for (i, g) in e.christoffel.iter().enumerate() {
            for (l, row) in g.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    if *v != 0.0 {
                        println!("  Γ^{}_{}{} = {v}", i + 1, l + 1, j + 1);
                    }
                }
            }
        }
        println!("  b = {:?}", e.modified_drift);
        println!("  div b = {}", e.divergence);
        println!("  R = {}", e.scalar_curvature);
    }
}

fn geometry(cfg: &Config, ctx: &RunContext) -> Result<Outcome, CliError> {
    let (system, points) = geometry_entries(cfg)?;
    if ctx.print_table {
        print_geometry(&points);
    }
    let mut files = Vec::new();
    if cfg.writes(Format::Csv) {
        let path = ctx.output_dir.join("geometry.csv");
        io::write_atomic(&path, &geometry_csv(&points, &path)?)?;
        files.push(path);
    }
    if cfg.writes(Format::Json) {
        let path = ctx.output_dir.join("geometry.json");
        let report = GeometryReport {
            command: cfg.command(),
            system,
            config_echo: cfg.to_toml(),
            defaults_applied: ctx.defaults_applied.clone(),
            points,
        };
        io::write_json(&path, &report)?;
        files.push(path);
    }
    Ok(Outcome { converged: true, files })
}
