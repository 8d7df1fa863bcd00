//! User-defined systems written as expressions in `x1 … xd`.

use std::collections::BTreeMap;
use std::sync::Arc;

use exmex::prelude::*;
use exmex::Differentiate;
use ompath_core::systems::{make_custom, CustomSystem};
use ompath_core::{Matrix, SystemModel, Vector};

use crate::config::{CustomBlock, DerivativeMode};
use crate::error::CliError;

#[derive(Clone, Copy, Debug)]
enum Slot {
    State(usize),
    Const(f64),
}

/// A parsed scalar expression with its variables bound to state
/// coordinates or constants.
#[derive(Clone, Debug)]
pub struct Expr {
    text: String,
    ex: FlatEx<f64>,
    slots: Vec<Slot>,
}

fn bind(text: &str, ex: &FlatEx<f64>, dim: usize, constants: &BTreeMap<String, f64>) -> Result<Vec<Slot>, CliError> {
    ex.var_names()
        .iter()
        .map(|name| {
            if let Some(v) = constants.get(name) {
                return Ok(Slot::Const(*v));
            }
            match name.strip_prefix('x').and_then(|k| k.parse::<usize>().ok()) {
                Some(k) if (1..=dim).contains(&k) => Ok(Slot::State(k - 1)),
                _ => Err(CliError::Expression {
                    text: text.to_string(),
                    message: format!("unknown variable `{name}` (state is x1..x{dim})"),
                }),
            }
        })
        .collect()
}

impl Expr {
    pub fn parse(text: &str, dim: usize, constants: &BTreeMap<String, f64>) -> Result<Self, CliError> {
        let ex = exmex::parse::<f64>(text).map_err(|e| CliError::Expression {
            text: text.to_string(),
            message: e.to_string(),
        })?;
        let slots = bind(text, &ex, dim, constants)?;
        Ok(Self {
            text: text.to_string(),
            ex,
            slots,
        })
    }

    pub fn eval(&self, x: &Vector) -> f64 {
        let vals: Vec<f64> = self
            .slots
            .iter()
            .map(|s| match *s {
                Slot::State(i) => x[i],
                Slot::Const(c) => c,
            })
            .collect();
        self.ex.eval(&vals).unwrap_or(f64::NAN)
    }

    pub fn is_constant(&self) -> bool {
        self.slots.iter().all(|s| matches!(s, Slot::Const(_)))
    }

    /// `∂/∂x_{i+1}`, symbolically.
    pub fn partial(&self, i: usize) -> Result<Expr, CliError> {
        let Some(k) = self.slots.iter().position(|s| matches!(s, Slot::State(j) if *j == i)) else {
            return Ok(Expr {
                text: "0".into(),
                ex: exmex::parse::<f64>("0").expect("literal parses"),
                slots: Vec::new(),
            });
        };
        let ex = self.ex.clone().partial(k).map_err(|e| CliError::Expression {
            text: self.text.clone(),
            message: format!("cannot differentiate: {e}"),
        })?;
        // Differentiation keeps the variable list, so the slots carry over.
        let slots = if ex.var_names().len() == self.ex.var_names().len() {
            self.slots.clone()
        } else {
            let by_name: BTreeMap<&str, Slot> = self
                .ex
                .var_names()
                .iter()
                .map(String::as_str)
                .zip(self.slots.iter().copied())
                .collect();
            ex.var_names().iter().map(|n| by_name[n.as_str()]).collect()
        };
        Ok(Expr {
            text: format!("d({})/dx{}", self.text, i + 1),
            ex,
            slots,
        })
    }
}

/// Names the expression parser reads as built-in constants.
const RESERVED: [&str; 6] = ["e", "E", "PI", "π", "TAU", "τ"];

fn check_constants(dim: usize, constants: &BTreeMap<String, f64>) -> Result<(), CliError> {
    for name in constants.keys() {
        let state = name
            .strip_prefix('x')
            .is_some_and(|k| !k.is_empty() && k.chars().all(|c| c.is_ascii_digit()));
        let plain = name.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_')
            && name.chars().all(|c| c.is_alphanumeric() || c == '_');
        let message = if RESERVED.contains(&name.as_str()) {
            format!("`{name}` is a built-in constant; pick another name")
        } else if state {
            format!("`{name}` clashes with the state variables x1..x{dim}")
        } else if !plain {
            format!("`{name}` is not a plain identifier")
        } else {
            continue;
        };
        return Err(CliError::Expression {
            text: name.clone(),
            message,
        });
    }
    Ok(())
}

fn matrix_of(rows: &[Vec<Expr>], x: &Vector) -> Matrix {
    let d = rows.len();
    Matrix::from_fn(d, d, |i, j| rows[i][j].eval(x))
}

/// Builds and validates the system described by a `[system]` block of kind
/// `custom`.
pub fn custom_system(block: &CustomBlock) -> Result<SystemModel, CliError> {
    let d = block.dim;
    let empty = BTreeMap::new();
    let constants = block.constants.as_ref().unwrap_or(&empty);
    check_constants(d, constants)?;
    let drift: Vec<Expr> = block
        .drift
        .iter()
        .map(|t| Expr::parse(t, d, constants))
        .collect::<Result<_, _>>()?;
    let diffusion: Vec<Vec<Expr>> = block
        .diffusion
        .iter()
        .map(|row| row.iter().map(|t| Expr::parse(t, d, constants)).collect())
        .collect::<Result<_, _>>()?;
    let constant_diffusion = diffusion.iter().flatten().all(Expr::is_constant);

    let f = drift.clone();
    let s = diffusion.clone();
    let mut custom = CustomSystem::new(
        block.label.clone().unwrap_or_else(|| "custom".into()),
        d,
        Arc::new(move |x: &Vector| Vector::from_fn(f.len(), |i, _| f[i].eval(x))),
        Arc::new(move |x: &Vector| matrix_of(&s, x)),
    );
    custom.constant_diffusion = constant_diffusion;
    custom.probe_radius = block.probe_radius.unwrap_or(2.0);
    custom.probe_center = block.probe_center.as_ref().map(|c| Vector::from_column_slice(c));

    if block.derivatives.unwrap_or(DerivativeMode::Symbolic) == DerivativeMode::Symbolic {
        // jac[i][j] = ∂f_i/∂x_j
        let jac: Vec<Vec<Expr>> = drift
            .iter()
            .map(|e| (0..d).map(|j| e.partial(j)).collect())
            .collect::<Result<_, _>>()?;
        custom.drift_jacobian = Some(Arc::new(move |x: &Vector| matrix_of(&jac, x)));
        // parts[l][i][j] = ∂σ_ij/∂x_l
        let parts: Vec<Vec<Vec<Expr>>> = (0..d)
            .map(|l| {
                diffusion
                    .iter()
                    .map(|row| row.iter().map(|e| e.partial(l)).collect())
                    .collect()
            })
            .collect::<Result<_, _>>()?;
        custom.diffusion_partials = Some(Arc::new(move |x: &Vector| {
            parts.iter().map(|p| matrix_of(p, x)).collect()
        }));
    }
    Ok(make_custom(custom)?)
}
