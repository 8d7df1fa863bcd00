use alloc::{format, vec::Vec};

use crate::error::{OmError, Result};
use crate::model::Vector;

/// Samples of state, costate and control on a uniform time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<Vector>,
    costates: Option<Vec<Vector>>,
    controls: Option<Vec<Vector>>,
}

/// `n` uniformly spaced nodes on `[t0, tf]`.
pub fn uniform_grid(t0: f64, tf: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return alloc::vec![t0];
    }
    let h = (tf - t0) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { tf } else { t0 + h * i as f64 })
        .collect()
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<Vector>) -> Result<Self> {
        let t = Self {
            times,
            states,
            costates: None,
            controls: None,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn with_costates(mut self, costates: Vec<Vector>) -> Result<Self> {
        self.costates = Some(costates);
        self.validate()?;
        Ok(self)
    }

    pub fn with_controls(mut self, controls: Vec<Vector>) -> Result<Self> {
        self.controls = Some(controls);
        self.validate()?;
        Ok(self)
    }

    /// Path sampled from `f(t)` on a uniform grid.
    pub fn from_fn(t0: f64, tf: f64, n: usize, f: impl Fn(f64) -> Vector) -> Result<Self> {
        let times = uniform_grid(t0, tf, n);
        let states = times.iter().map(|&t| f(t)).collect();
        Self::new(times, states)
    }

    /// At least two nodes, uniform spacing to 1e-12 relative, and matching
    /// lengths and dimensions in every populated array.
    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        if n < 2 {
            return Err(OmError::DegenerateGrid(format!("{n} nodes, need at least 2")));
        }
        let span = self.times[n - 1] - self.times[0];
        if !(span >= 0.0) || !span.is_finite() {
            return Err(OmError::DegenerateGrid(format!(
                "time span {span} is not a forward interval"
            )));
        }
        let h = span / (n - 1) as f64;
        let tol = 1e-12 * libm::fabs(span).max(libm::fabs(self.times[0])).max(1e-300);
        for (i, w) in self.times.windows(2).enumerate() {
            if libm::fabs((w[1] - w[0]) - h) > tol.max(1e-12 * h) * 4.0 {
                return Err(OmError::DegenerateGrid(format!("nonuniform spacing at node {i}")));
            }
        }
        let d = self.states.first().map_or(0, |s| s.len());
        for (name, arr) in [
            ("states", Some(&self.states)),
            ("costates", self.costates.as_ref()),
            ("controls", self.controls.as_ref()),
        ] {
            let Some(arr) = arr else { continue };
            if arr.len() != n {
                return Err(OmError::DegenerateGrid(format!(
                    "{name} has {} rows for {n} nodes",
                    arr.len()
                )));
            }
            if let Some(bad) = arr.iter().find(|v| v.len() != d) {
                return Err(OmError::DimensionMismatch {
                    what: "trajectory row",
                    expected: d,
                    found: bad.len(),
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, |s| s.len())
    }

    pub fn spacing(&self) -> f64 {
        let n = self.times.len();
        (self.times[n - 1] - self.times[0]) / (n - 1) as f64
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Vector] {
        &self.states
    }

    pub fn costates(&self) -> Option<&[Vector]> {
        self.costates.as_deref()
    }

    pub fn controls(&self) -> Option<&[Vector]> {
        self.controls.as_deref()
    }

    pub fn final_state(&self) -> &Vector {
        &self.states[self.states.len() - 1]
    }

    /// Linear interpolation of the states at time `t` (clamped to the grid).
    pub fn state_at(&self, t: f64) -> Vector {
        interpolate(&self.times, &self.states, t)
    }

    /// Largest Euclidean distance between the two paths, each linearly
    /// interpolated, taken over the nodes of both grids.
    pub fn sup_distance(&self, other: &Trajectory) -> f64 {
        if self.times == other.times {
            return self
                .states
                .iter()
                .zip(&other.states)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
        }
        let one_way = |a: &Trajectory, b: &Trajectory| {
            a.times
                .iter()
                .zip(&a.states)
                .map(|(t, x)| (x - b.state_at(*t)).norm())
                .fold(0.0, f64::max)
        };
        one_way(self, other).max(one_way(other, self))
    }

    pub fn is_finite(&self) -> bool {
        let ok = |a: &[Vector]| a.iter().all(|v| v.iter().all(|x| x.is_finite()));
        ok(&self.states) && self.costates.as_deref().is_none_or(ok) && self.controls.as_deref().is_none_or(ok)
    }
}

/// Values at the interval midpoints of a uniform grid by four-point Lagrange
/// interpolation (one-sided stencils at the ends, linear below four nodes).
pub fn midpoints(values: &[Vector]) -> Vec<Vector> {
    let n = values.len();
    if n < 4 {
        return values.windows(2).map(|w| (&w[0] + &w[1]) * 0.5).collect();
    }
    let v = values;
    (0..n - 1)
        .map(|i| {
            if i == 0 {
                (&v[0] * 5.0 + &v[1] * 15.0 - &v[2] * 5.0 + &v[3]) / 16.0
            } else if i == n - 2 {
                (&v[n - 1] * 5.0 + &v[n - 2] * 15.0 - &v[n - 3] * 5.0 + &v[n - 4]) / 16.0
            } else {
                ((&v[i] + &v[i + 1]) * 9.0 - &v[i - 1] - &v[i + 2]) / 16.0
            }
        })
        .collect()
}

pub(crate) fn interpolate(times: &[f64], values: &[Vector], t: f64) -> Vector {
    let n = times.len();
    if t <= times[0] {
        return values[0].clone();
    }
    if t >= times[n - 1] {
        return values[n - 1].clone();
    }
    let h = (times[n - 1] - times[0]) / (n - 1) as f64;
    let mut k = libm::floor((t - times[0]) / h) as usize;
    if k >= n - 1 {
        k = n - 2;
    }
    let w = (t - times[k]) / (times[k + 1] - times[k]);
    &values[k] * (1.0 - w) + &values[k + 1] * w
}
