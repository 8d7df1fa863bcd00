//! Run configuration: TOML text in, a fully defaulted and validated
//! [`Config`] out.
//!
//! Every optional field left out of the file is filled in by
//! [`Config::fill_defaults`], which reports what it filled. A filled config
//! serialises back to TOML that parses to the same value, so the echo in each
//! report can be fed straight back in.

use std::collections::BTreeMap;
use std::fmt;

use ompath_core::monte_carlo::{step_count, MIN_STRIDE};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Solve,
    Sample,
    Verify,
    Geometry,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Solve => "solve",
            Command::Sample => "sample",
            Command::Verify => "verify",
            Command::Geometry => "geometry",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    pub system: SystemBlock,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc: Option<McBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometryBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputBlock>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemBlock {
    DoubleWell(DoubleWellBlock),
    MaierStein(MaierSteinBlock),
    Npz(NpzBlock),
    Custom(CustomBlock),
}

impl SystemBlock {
    pub fn kind(&self) -> &'static str {
        match self {
            SystemBlock::DoubleWell(_) => "double_well",
            SystemBlock::MaierStein(_) => "maier_stein",
            SystemBlock::Npz(_) => "npz",
            SystemBlock::Custom(_) => "custom",
        }
    }

    /// State dimension, when the block fixes it.
    pub fn dim(&self) -> usize {
        match self {
            SystemBlock::DoubleWell(_) => 1,
            SystemBlock::MaierStein(_) => 2,
            SystemBlock::Npz(_) => 3,
            SystemBlock::Custom(c) => c.dim,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoubleWellBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaierSteinBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NpzBlock {
    #[serde(rename = "D", skip_serializing_if = "Option::is_none")]
    pub big_d: Option<f64>,
    #[serde(rename = "N0", skip_serializing_if = "Option::is_none")]
    pub n0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(rename = "D1", skip_serializing_if = "Option::is_none")]
    pub d1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(rename = "D2", skip_serializing_if = "Option::is_none")]
    pub d2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<[f64; 3]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMode {
    /// Differentiate the expressions symbolically.
    Symbolic,
    /// Leave every derivative to finite differences.
    Numeric,
}

/// A system given as expressions in `x1 … xd` and named constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub dim: usize,
    pub drift: Vec<String>,
    /// Rows of σ.
    pub diffusion: Vec<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub derivatives: Option<DerivativeMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe_center: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalKind {
    Saturating,
    Quadratic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemBlock {
    pub x0: Vec<f64>,
    pub x_target: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tf: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terminal_weight: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terminal_cost: Option<TerminalKind>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub damping_eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost_tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stationarity_tolerance: Option<f64>,
    /// Trajectory CSV whose θ columns seed the iteration; zeros otherwise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_control_csv: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    MinAction,
    PerSliceMode,
    PerSliceMedian,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attempts: Option<usize>,
    /// Storage grid of accepted paths.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tube_delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tube_trials: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryBlock {
    pub points: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directory: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub formats: Option<Vec<Format>>,
}

pub const DEFAULT_TERMINAL_WEIGHT: f64 = 1.0;
pub const DEFAULT_ATTEMPTS: usize = 100_000;
pub const DEFAULT_TUBE_TRIALS: usize = 100_000;

/// 1-based line of the first `key = …` entry inside `[table]` (or at top
/// level when `table` is empty).
pub fn locate(text: &str, table: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if let Some(h) = t.strip_prefix('[') {
            current = h
                .trim_start_matches('[')
                .split(']')
                .next()
                .unwrap_or("")
                .trim()
                .to_string();
            if key.is_empty() && current == table {
                return Some(i + 1);
            }
            continue;
        }
        if current == table {
            if let Some((k, _)) = t.split_once('=') {
                if k.trim().trim_matches('"') == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// `unknown field `x`, expected one of `a`, `b`` → nearest candidate.
fn suggestion(message: &str) -> Option<(String, String)> {
    let rest = message.split("unknown field `").nth(1)?;
    let (unknown, tail) = rest.split_once('`')?;
    let candidates: Vec<&str> = tail.split('`').skip(1).step_by(2).collect();
    let best = candidates
        .iter()
        .map(|c| (strsim::damerau_levenshtein(unknown, c), *c))
        .min()?;
    (best.0 <= 3 || strsim::jaro_winkler(unknown, best.1) > 0.85).then(|| (unknown.to_string(), best.1.to_string()))
}

impl Config {
    /// Parses TOML text without filling defaults.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str::<Config>(text).map_err(|e| {
            let line = e.span().map(|s| line_of(text, s.start));
            let message = e.message().to_string();
            match suggestion(&message) {
                Some((unknown, near)) => CliError::Validation {
                    field: unknown.clone(),
                    line: line.or_else(|| {
                        text.lines()
                            .position(|l| l.trim_start().starts_with(&unknown))
                            .map(|i| i + 1)
                    }),
                    message: format!("unknown key `{unknown}`; did you mean `{near}`?"),
                },
                None if message.contains("unknown field") || message.contains("missing field") => {
                    CliError::Validation {
                        field: message.split('`').nth(1).unwrap_or("").to_string(),
                        line,
                        message,
                    }
                }
                None => CliError::Parse { line, message },
            }
        })
    }

    /// Parses, applies a seed override, fills defaults for `command` and
    /// validates. Returns the config and the list of defaults applied, as
    /// `key = value` strings.
    pub fn load(text: &str, command: Option<Command>, seed: Option<u64>) -> Result<(Self, Vec<String>), CliError> {
        let mut cfg = Self::parse(text)?;
        if let Some(seed) = seed {
            cfg.mc.get_or_insert_with(McBlock::default).seed = Some(seed);
        }
        let command = match (command, cfg.command) {
            (Some(a), Some(b)) if a != b => {
                return Err(CliError::Validation {
                    field: "command".into(),
                    line: locate(text, "", "command"),
                    message: format!("config is for `{b}` but `{a}` was requested"),
                })
            }
            (Some(a), _) => a,
            (None, Some(b)) => b,
            (None, None) => {
                return Err(CliError::Validation {
                    field: "command".into(),
                    line: None,
                    message: "no command given on the command line or in the config".into(),
                })
            }
        };
        cfg.command = Some(command);
        let applied = cfg.fill_defaults()?;
        cfg.validate().map_err(|e| match e {
            CliError::Validation {
                field,
                line: None,
                message,
            } => {
                let (table, key) = field.rsplit_once('.').unwrap_or(("", field.as_str()));
                let line = locate(text, table, key).or_else(|| locate(text, table, ""));
                CliError::Validation { field, line, message }
            }
            other => other,
        })?;
        Ok((cfg, applied))
    }

    pub fn command(&self) -> Command {
        self.command.unwrap_or(Command::Solve)
    }

    fn needs_problem(&self) -> bool {
        self.command() != Command::Geometry
    }

    fn needs_mc(&self) -> bool {
        matches!(self.command(), Command::Sample | Command::Verify)
    }

    /// Fills every optional field the command uses and returns what was
    /// filled.
    pub fn fill_defaults(&mut self) -> Result<Vec<String>, CliError> {
        let mut applied = Vec::new();
        macro_rules! default {
            ($slot:expr, $value:expr, $name:expr) => {
                if $slot.is_none() {
                    let v = $value;
                    applied.push(format!("{} = {}", $name, show(&v)));
                    $slot = Some(v);
                }
            };
        }
        match &mut self.system {
            SystemBlock::DoubleWell(b) => default!(b.sigma, 1.0, "system.sigma"),
            SystemBlock::MaierStein(b) => {
                default!(b.gamma, 1.0, "system.gamma");
                default!(b.epsilon, 0.0, "system.epsilon");
            }
            SystemBlock::Npz(b) => {
                let p = ompath_core::systems::NpzParams::default();
                default!(b.big_d, p.big_d, "system.D");
                default!(b.n0, p.n0, "system.N0");
                default!(b.a, p.a, "system.a");
                default!(b.b, p.b, "system.b");
                default!(b.alpha, p.alpha, "system.alpha");
                default!(b.c, p.c, "system.c");
                default!(b.d, p.d, "system.d");
                default!(b.d1, p.d1, "system.D1");
                default!(b.beta, p.beta, "system.beta");
                default!(b.d2, p.d2, "system.D2");
                default!(b.sigma, p.sigma, "system.sigma");
            }
            SystemBlock::Custom(b) => {
                default!(b.label, "custom".to_string(), "system.label");
                default!(b.derivatives, DerivativeMode::Symbolic, "system.derivatives");
                default!(b.probe_radius, 2.0, "system.probe_radius");
            }
        }
        let default_tf = match &self.system {
            SystemBlock::DoubleWell(_) | SystemBlock::Npz(_) => Some(1.0),
            SystemBlock::MaierStein(_) => Some(5.0),
            SystemBlock::Custom(_) => None,
        };
        if self.needs_problem() {
            let Some(p) = self.problem.as_mut() else {
                return Err(CliError::Validation {
                    field: "problem".into(),
                    line: None,
                    message: format!("`{}` needs a [problem] block with x0 and x_target", self.command()),
                });
            };
            default!(p.t0, 0.0, "problem.t0");
            if p.tf.is_none() {
                let Some(tf) = default_tf else {
                    return Err(CliError::Validation {
                        field: "problem.tf".into(),
                        line: None,
                        message: "custom systems have no default horizon; set problem.tf".into(),
                    });
                };
                default!(p.tf, tf, "problem.tf");
            }
            default!(p.terminal_weight, DEFAULT_TERMINAL_WEIGHT, "problem.terminal_weight");
            default!(p.terminal_cost, TerminalKind::Saturating, "problem.terminal_cost");

            let s = self.solver.get_or_insert_with(SolverBlock::default);
            let d = ompath_core::SolverConfig::default();
            default!(s.n_nodes, d.n_nodes, "solver.n_nodes");
            default!(s.max_iterations, d.max_iterations, "solver.max_iterations");
            default!(s.damping_eta, d.damping_eta, "solver.damping_eta");
            default!(s.cost_tolerance, d.cost_tolerance, "solver.cost_tolerance");
            default!(
                s.stationarity_tolerance,
                d.stationarity_tolerance,
                "solver.stationarity_tolerance"
            );
        }
        if self.needs_mc() || self.mc.is_some() {
            let m = self.mc.get_or_insert_with(McBlock::default);
            default!(m.seed, 0, "mc.seed");
            default!(m.dt, 1e-3, "mc.dt");
            default!(m.delta, 0.1, "mc.delta");
            default!(m.attempts, DEFAULT_ATTEMPTS, "mc.attempts");
            default!(m.reference, ReferenceKind::MinAction, "mc.reference");
            default!(m.tube_delta, 0.3, "mc.tube_delta");
            default!(m.tube_trials, DEFAULT_TUBE_TRIALS, "mc.tube_trials");
            if m.n_nodes.is_none() {
                if let Some(p) = &self.problem {
                    // Coarsest storage grid with MIN_STRIDE steps per interval.
                    let steps =
                        step_count(p.t0.unwrap_or(0.0), p.tf.unwrap_or(1.0), m.dt.unwrap_or(1e-3)).map_err(|e| {
                            CliError::Validation {
                                field: "mc.dt".into(),
                                line: None,
                                message: e.to_string(),
                            }
                        })?;
                    if steps % MIN_STRIDE != 0 {
                        return Err(CliError::Validation {
                            field: "mc.n_nodes".into(),
                            line: None,
                            message: format!("{steps} steps are not a multiple of {MIN_STRIDE}; set mc.n_nodes"),
                        });
                    }
                    default!(m.n_nodes, steps / MIN_STRIDE + 1, "mc.n_nodes");
                }
            }
        }
        let o = self.output.get_or_insert_with(OutputBlock::default);
        default!(
            o.directory,
            format!("out/{}", self.command.unwrap_or(Command::Solve)),
            "output.directory"
        );
        default!(o.formats, vec![Format::Csv, Format::Json], "output.formats");
        Ok(applied)
    }

    /// Checks a filled config. Field names in errors are dotted paths.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, message: String| CliError::Validation {
            field: field.into(),
            line: None,
            message,
        };
        let finite = |field: &str, v: f64| -> Result<(), CliError> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(bad(field, format!("must be finite, got {v}")))
            }
        };
        let d = self.system.dim();
        match &self.system {
            SystemBlock::DoubleWell(b) => {
                let s = b.sigma.unwrap_or(1.0);
                if !(s > 0.0) || !s.is_finite() {
                    return Err(bad("system.sigma", format!("must be positive, got {s}")));
                }
            }
            SystemBlock::MaierStein(b) => {
                finite("system.gamma", b.gamma.unwrap_or(1.0))?;
                let e = b.epsilon.unwrap_or(0.0);
                if !(e >= 0.0) || !e.is_finite() {
                    return Err(bad("system.epsilon", format!("must be nonnegative, got {e}")));
                }
            }
            SystemBlock::Npz(_) => {
                crate::build::npz_params(&self.system)
                    .validate()
                    .map_err(|e| bad("system", e.to_string()))?;
            }
            SystemBlock::Custom(c) => {
                if c.dim == 0 {
                    return Err(bad("system.dim", "must be positive".into()));
                }
                if c.drift.len() != c.dim {
                    return Err(bad(
                        "system.drift",
                        format!("needs {} entries, got {}", c.dim, c.drift.len()),
                    ));
                }
                if c.diffusion.len() != c.dim || c.diffusion.iter().any(|r| r.len() != c.dim) {
                    return Err(bad("system.diffusion", format!("must be {0}×{0}", c.dim)));
                }
                if let Some(center) = &c.probe_center {
                    if center.len() != c.dim {
                        return Err(bad("system.probe_center", format!("needs {} entries", c.dim)));
                    }
                }
                if !(c.probe_radius.unwrap_or(2.0) > 0.0) {
                    return Err(bad("system.probe_radius", "must be positive".into()));
                }
            }
        }
        if let Some(p) = &self.problem {
            for (name, v) in [("problem.x0", &p.x0), ("problem.x_target", &p.x_target)] {
                if v.len() != d {
                    return Err(bad(
                        name,
                        format!("has {} entries for a {d}-dimensional system", v.len()),
                    ));
                }
                for x in v {
                    finite(name, *x)?;
                }
            }
            let (t0, tf) = (p.t0.unwrap_or(0.0), p.tf.unwrap_or(1.0));
            finite("problem.t0", t0)?;
            finite("problem.tf", tf)?;
            if !(tf > t0) {
                return Err(bad(
                    "problem.tf",
                    format!("horizon problem.t0 = {t0}, problem.tf = {tf}: tf must exceed t0"),
                ));
            }
            let w = p.terminal_weight.unwrap_or(1.0);
            if !(w >= 0.0) || !w.is_finite() {
                return Err(bad("problem.terminal_weight", format!("must be nonnegative, got {w}")));
            }
        }
        if let Some(s) = &self.solver {
            if s.n_nodes.is_some_and(|n| n < 5) {
                return Err(bad("solver.n_nodes", "needs at least 5 nodes".into()));
            }
            if let Some(eta) = s.damping_eta {
                if !(eta > 0.0 && eta <= 1.0) {
                    return Err(bad("solver.damping_eta", format!("must lie in (0, 1], got {eta}")));
                }
            }
            for (name, v) in [
                ("solver.cost_tolerance", s.cost_tolerance),
                ("solver.stationarity_tolerance", s.stationarity_tolerance),
            ] {
                if let Some(v) = v {
                    if !(v > 0.0) || !v.is_finite() {
                        return Err(bad(name, format!("must be positive, got {v}")));
                    }
                }
            }
        }
        if let Some(m) = &self.mc {
            for (name, v) in [("mc.dt", m.dt), ("mc.delta", m.delta), ("mc.tube_delta", m.tube_delta)] {
                if let Some(v) = v {
                    if !(v > 0.0) || !v.is_finite() {
                        return Err(bad(name, format!("must be positive, got {v}")));
                    }
                }
            }
            if m.attempts == Some(0) {
                return Err(bad("mc.attempts", "must be positive".into()));
            }
            if m.tube_trials == Some(0) {
                return Err(bad("mc.tube_trials", "must be positive".into()));
            }
            if let (Some(p), Some(dt), Some(n)) = (&self.problem, m.dt, m.n_nodes) {
                let (t0, tf) = (p.t0.unwrap_or(0.0), p.tf.unwrap_or(1.0));
                let steps = step_count(t0, tf, dt).map_err(|e| bad("mc.dt", e.to_string()))?;
                if n < 2 || steps % (n - 1) != 0 || steps / (n - 1) < MIN_STRIDE {
                    return Err(bad(
                        "mc.n_nodes",
                        format!("{steps} steps of mc.dt must split into n_nodes − 1 intervals of ≥ {MIN_STRIDE} steps"),
                    ));
                }
            }
        }
        if self.command() == Command::Geometry {
            let Some(g) = &self.geometry else {
                return Err(bad(
                    "geometry",
                    "`geometry` needs a [geometry] block with points".into(),
                ));
            };
            if g.points.is_empty() {
                return Err(bad("geometry.points", "no points listed".into()));
            }
            for p in &g.points {
                if p.len() != d {
                    return Err(bad("geometry.points", format!("point {p:?} is not {d}-dimensional")));
                }
                for x in p {
                    finite("geometry.points", *x)?;
                }
            }
        }
        if let Some(o) = &self.output {
            if o.formats.as_ref().is_some_and(|f| f.is_empty()) {
                return Err(bad("output.formats", "at least one format is needed".into()));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn problem(&self) -> &ProblemBlock {
        self.problem.as_ref().expect("validated config has a problem block")
    }

    pub fn solver(&self) -> &SolverBlock {
        self.solver.as_ref().expect("validated config has a solver block")
    }

    pub fn mc(&self) -> &McBlock {
        self.mc.as_ref().expect("validated config has an mc block")
    }

    pub fn output_dir(&self) -> &str {
        self.output
            .as_ref()
            .and_then(|o| o.directory.as_deref())
            .unwrap_or("out")
    }

    pub fn writes(&self, format: Format) -> bool {
        self.output
            .as_ref()
            .and_then(|o| o.formats.as_ref())
            .is_none_or(|f| f.contains(&format))
    }

    pub fn seed(&self) -> Option<u64> {
        self.mc.as_ref().and_then(|m| m.seed)
    }
}

fn show<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).unwrap_or_default()
}
