//! Central finite-difference helpers shared by the geometry engine, the
//! derivative checks and the solver.

use crate::model::{Matrix, Vector};

/// Per-coordinate first-derivative step `max(1e-5, 1e-5·|x|)`.
#[inline]
pub fn step(x: f64) -> f64 {
    let h = 1e-5 * libm::fabs(x);
    if h > 1e-5 {
        h
    } else {
        1e-5
    }
}

/// Step for derivatives of quantities that are themselves finite differences
/// (Christoffel derivatives in the curvature, x-gradients of the running cost).
pub const NESTED_STEP: f64 = 1e-4;

#[inline]
pub fn nested_step(x: f64) -> f64 {
    let h = NESTED_STEP * libm::fabs(x);
    if h > NESTED_STEP {
        h
    } else {
        NESTED_STEP
    }
}

/// Step for a third level of differencing, used for running-cost gradients
/// when the geometry itself is assembled from differences.
pub const OUTER_STEP: f64 = 3e-3;

#[inline]
pub fn outer_step(x: f64) -> f64 {
    let h = OUTER_STEP * libm::fabs(x);
    if h > OUTER_STEP {
        h
    } else {
        OUTER_STEP
    }
}

/// `x ± h·e_k`.
pub fn shifted(x: &Vector, k: usize, h: f64) -> (Vector, Vector) {
    let mut plus = x.clone();
    let mut minus = x.clone();
    plus[k] += h;
    minus[k] -= h;
    (plus, minus)
}

/// Central-difference gradient of a scalar function.
pub fn gradient<E>(
    x: &Vector,
    step_of: impl Fn(f64) -> f64,
    mut f: impl FnMut(&Vector) -> Result<f64, E>,
) -> Result<Vector, E> {
    let mut g = Vector::zeros(x.len());
    for k in 0..x.len() {
        let h = step_of(x[k]);
        let (p, m) = shifted(x, k, h);
        g[k] = (f(&p)? - f(&m)?) / (2.0 * h);
    }
    Ok(g)
}

/// Like [`gradient`], but a stencil point outside the accepted set switches
/// that coordinate to the second-order one-sided formula on the other side.
pub fn gradient_within<E>(
    x: &Vector,
    step_of: impl Fn(f64) -> f64,
    inside: impl Fn(&Vector) -> bool,
    mut f: impl FnMut(&Vector) -> Result<f64, E>,
) -> Result<Vector, E> {
    let mut g = Vector::zeros(x.len());
    for k in 0..x.len() {
        let h = step_of(x[k]);
        let (p, m) = shifted(x, k, h);
        g[k] = match (inside(&p), inside(&m)) {
            (false, true) => {
                let (_, m2) = shifted(x, k, 2.0 * h);
                (3.0 * f(x)? - 4.0 * f(&m)? + f(&m2)?) / (2.0 * h)
            }
            (true, false) => {
                let (p2, _) = shifted(x, k, 2.0 * h);
                (-3.0 * f(x)? + 4.0 * f(&p)? - f(&p2)?) / (2.0 * h)
            }
            _ => (f(&p)? - f(&m)?) / (2.0 * h),
        };
    }
    Ok(g)
}

/// Central-difference Jacobian `J[i][k] = ∂f_i/∂x_k`.
pub fn jacobian(x: &Vector, f: impl Fn(&Vector) -> Vector) -> Matrix {
    let n = x.len();
    let mut cols = alloc::vec::Vec::with_capacity(n);
    for k in 0..n {
        let h = step(x[k]);
        let (p, m) = shifted(x, k, h);
        cols.push((f(&p) - f(&m)) / (2.0 * h));
    }
    let rows = cols.first().map_or(0, |c| c.len());
    Matrix::from_fn(rows, n, |i, k| cols[k][i])
}

/// [`jacobian`] with the one-sided fallback of [`gradient_within`].
pub fn jacobian_within(x: &Vector, inside: impl Fn(&Vector) -> bool, f: impl Fn(&Vector) -> Vector) -> Matrix {
    let n = x.len();
    let mut cols = alloc::vec::Vec::with_capacity(n);
    for k in 0..n {
        let h = step(x[k]);
        let (p, m) = shifted(x, k, h);
        cols.push(match (inside(&p), inside(&m)) {
            (false, true) => {
                let (_, m2) = shifted(x, k, 2.0 * h);
                (f(x) * 3.0 - f(&m) * 4.0 + f(&m2)) / (2.0 * h)
            }
            (true, false) => {
                let (p2, _) = shifted(x, k, 2.0 * h);
                (f(&p) * 4.0 - f(x) * 3.0 - f(&p2)) / (2.0 * h)
            }
            _ => (f(&p) - f(&m)) / (2.0 * h),
        });
    }
    let rows = cols.first().map_or(0, |c| c.len());
    Matrix::from_fn(rows, n, |i, k| cols[k][i])
}

/// Max-norm relative error `‖a − b‖∞ / max(‖a‖∞, ‖b‖∞)`, zero when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let mut diff: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (&u, &v) in a.iter().zip(b) {
        diff = diff.max(libm::fabs(u - v));
        scale = scale.max(libm::fabs(u)).max(libm::fabs(v));
    }
    if scale < 1e-300 {
        0.0
    } else {
        diff / scale
    }
}
