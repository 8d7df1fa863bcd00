//! Command-line driver for `ompath-core`: TOML run configurations, the
//! `solve`, `sample`, `verify` and `geometry` commands, and CSV/JSON
//! artifacts.
// `!(a > b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod build;
pub mod config;
pub mod error;
pub mod expr;
pub mod io;
pub mod run;

use std::path::{Path, PathBuf};

use clap::Parser;
use log::{error, info};

pub use config::{Command, Config};
pub use error::CliError;
pub use run::{run, Outcome, RunContext};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ompath", version, about = "Most probable transition paths of SDEs")]
pub struct Cli {
    /// What to run; may be omitted when the config names a command.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// TOML run configuration.
    #[arg(long, short)]
    pub config: PathBuf,
    /// Overrides `output.directory`.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Overrides `mc.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Only errors on stderr, no table on stdout.
    #[arg(long, short)]
    pub quiet: bool,
}

/// Reads and loads a config file, returning the config, the defaults it
/// needed and the directory relative paths refer to.
pub fn load_config(
    path: &Path,
    command: Option<Command>,
    seed: Option<u64>,
) -> Result<(Config, Vec<String>, PathBuf), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let (cfg, applied) = Config::load(&text, command, seed)?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, applied, dir))
}

/// Runs a parsed command line and returns the process exit code.
pub fn execute(cli: &Cli) -> i32 {
    match try_execute(cli) {
        Ok(outcome) if outcome.converged => EXIT_OK,
        Ok(_) => EXIT_NOT_CONVERGED,
        Err(e) => {
            error!("{e}");
            EXIT_ERROR
        }
    }
}

fn try_execute(cli: &Cli) -> Result<Outcome, CliError> {
    let (cfg, applied, config_dir) = load_config(&cli.config, cli.command, cli.seed)?;
    for d in &applied {
        info!("default: {d}");
    }
    let output_dir = cli
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(cfg.output_dir()));
    let ctx = RunContext {
        output_dir,
        config_dir,
        defaults_applied: applied,
        print_table: !cli.quiet,
    };
    let outcome = run(&cfg, &ctx)?;
    for f in &outcome.files {
        info!("wrote {}", f.display());
    }
    if !outcome.converged {
        log::warn!("{} finished without converging", cfg.command());
    }
    Ok(outcome)
}
