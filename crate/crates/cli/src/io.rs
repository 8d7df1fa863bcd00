//! CSV and JSON artifacts. Every file is written to a temporary sibling and
//! renamed into place, so a crash never leaves a partial artifact.

use std::io::Write;
use std::path::Path;

use ompath_core::monte_carlo::TransitionEnsemble;
use ompath_core::{Trajectory, Vector};
use serde::Serialize;

use crate::error::CliError;

/// 17 significant digits: enough to read every f64 back unchanged.
pub fn number(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Format {
        path: path.into(),
        message: e.to_string(),
    })?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn csv_bytes(header: Vec<String>, rows: impl Iterator<Item = Vec<String>>, path: &Path) -> Result<Vec<u8>, CliError> {
    let fail = |e: csv::Error| CliError::Format {
        path: path.into(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).map_err(fail)?;
    for row in rows {
        w.write_record(&row).map_err(fail)?;
    }
    w.into_inner().map_err(|e| CliError::Format {
        path: path.into(),
        message: e.to_string(),
    })
}

fn columns(prefix: &str, d: usize) -> impl Iterator<Item = String> + '_ {
    (1..=d).map(move |i| format!("{prefix}{i}"))
}

/// `t,x1..xd[,p1..pd][,theta1..thetad]`, one row per node. Costate and
/// control columns appear when the trajectory carries them.
pub fn trajectory_csv(traj: &Trajectory, path: &Path) -> Result<Vec<u8>, CliError> {
    let d = traj.dim();
    let mut header = vec!["t".to_string()];
    header.extend(columns("x", d));
    if traj.costates().is_some() {
        header.extend(columns("p", d));
    }
    if traj.controls().is_some() {
        header.extend(columns("theta", d));
    }
    let rows = (0..traj.len()).map(|i| {
        let mut row = vec![number(traj.times()[i])];
        let mut push = |v: &Vector| row.extend(v.iter().map(|c| number(*c)));
        push(&traj.states()[i]);
        if let Some(p) = traj.costates() {
            push(&p[i]);
        }
        if let Some(th) = traj.controls() {
            push(&th[i]);
        }
        row
    });
    csv_bytes(header, rows, path)
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<(), CliError> {
    write_atomic(path, &trajectory_csv(traj, path)?)
}

/// Long format: `trial,t,x1..xd`, one row per accepted path and node.
pub fn write_ensemble(path: &Path, ensemble: &TransitionEnsemble) -> Result<(), CliError> {
    let d = ensemble.x_target().len();
    let mut header = vec!["trial".to_string(), "t".to_string()];
    header.extend(columns("x", d));
    let times = ensemble.times();
    let rows = ensemble.paths().iter().zip(ensemble.trials()).flat_map(|(p, trial)| {
        p.iter().zip(times).map(move |(x, t)| {
            let mut row = vec![trial.to_string(), number(*t)];
            row.extend(x.iter().map(|c| number(*c)));
            row
        })
    });
    write_atomic(path, &csv_bytes(header, rows, path)?)
}

/// Reads a trajectory CSV. Only `t` and the `x` columns are required.
pub fn read_trajectory(path: &Path) -> Result<Trajectory, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_trajectory(&text, path)
}

pub fn parse_trajectory(text: &str, path: &Path) -> Result<Trajectory, CliError> {
    let bad = |message: String| CliError::Format {
        path: path.into(),
        message,
    };
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.first().map(String::as_str) != Some("t") {
        return Err(bad("first column must be `t`".into()));
    }
    let count = |prefix: &str| {
        let mut k = 0;
        while header.iter().any(|h| *h == format!("{prefix}{}", k + 1)) {
            k += 1;
        }
        k
    };
    let d = count("x");
    if d == 0 {
        return Err(bad("no x1 column".into()));
    }
    let find = |name: String| header.iter().position(|h| *h == name);
    let idx = |prefix: &str| -> Option<Vec<usize>> { (1..=d).map(|i| find(format!("{prefix}{i}"))).collect() };
    let xs = idx("x").expect("counted above");
    let ps = idx("p");
    let ths = idx("theta");

    let (mut times, mut states, mut costates, mut controls) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (row_no, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |j: usize| -> Result<f64, CliError> {
            rec.get(j)
                .ok_or_else(|| bad(format!("row {} is short", row_no + 2)))?
                .trim()
                .parse::<f64>()
                .map_err(|e| bad(format!("row {}: {e}", row_no + 2)))
        };
        let vector = |cols: &[usize]| -> Result<Vector, CliError> {
            let v: Vec<f64> = cols.iter().map(|&j| field(j)).collect::<Result<_, _>>()?;
            Ok(Vector::from_vec(v))
        };
        times.push(field(0)?);
        states.push(vector(&xs)?);
        if let Some(c) = &ps {
            costates.push(vector(c)?);
        }
        if let Some(c) = &ths {
            controls.push(vector(c)?);
        }
    }
    let mut traj = Trajectory::new(times, states).map_err(|e| bad(e.to_string()))?;
    if ps.is_some() {
        traj = traj.with_costates(costates).map_err(|e| bad(e.to_string()))?;
    }
    if ths.is_some() {
        traj = traj.with_controls(controls).map_err(|e| bad(e.to_string()))?;
    }
    Ok(traj)
}
