//! Euler-Maruyama sampling of `dX = b̃(X) dt + σ(X) dB`, transition
//! ensembles, empirical reference paths and δ-tube probabilities.
//!
//! Noise for trial `k` under base seed `s` comes from the ChaCha8 stream
//! `(key = s, stream = k)`, consumed step by step, so every output is a pure
//! function of its inputs and trials can run in any order.

use alloc::{format, vec::Vec};

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{OmError, Result};
use crate::geometry::om_action;
use crate::model::{SystemModel, Vector};
use crate::trajectory::{interpolate, uniform_grid, Trajectory};

const BLOWUP: f64 = 1e8;

/// Stream offset separating tube-probability trials from ensemble trials.
const TUBE_STREAMS: u64 = 1 << 62;

fn noise_source(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Number of steps of size `dt` covering `[t0, tf]`; `dt` must divide the
/// interval to 1e-9 relative.
pub fn step_count(t0: f64, tf: f64, dt: f64) -> Result<usize> {
    let span = tf - t0;
    if !(dt > 0.0) || !(span > 0.0) {
        return Err(OmError::InvalidParams(format!(
            "need dt > 0 and tf > t0, got dt = {dt}, [{t0}, {tf}]"
        )));
    }
    let steps = libm::round(span / dt);
    if libm::fabs(steps * dt - span) > 1e-9 * span || steps < 1.0 {
        return Err(OmError::InvalidParams(format!(
            "dt = {dt} does not divide [{t0}, {tf}]"
        )));
    }
    Ok(steps as usize)
}

/// Runs one path, handing every state (step index, state) to `visit`; the
/// walk stops early when `visit` returns `false`.
fn walk(
    system: &SystemModel,
    x0: &Vector,
    dt: f64,
    steps: usize,
    rng: &mut ChaCha8Rng,
    t0: f64,
    mut visit: impl FnMut(usize, &Vector) -> bool,
) -> Result<()> {
    let d = system.dim();
    let sqrt_dt = libm::sqrt(dt);
    let mut x = x0.clone();
    if !visit(0, &x) {
        return Ok(());
    }
    let mut xi = Vector::zeros(d);
    for k in 1..=steps {
        for c in xi.iter_mut() {
            *c = StandardNormal.sample(rng);
        }
        let drift = system.drift(&x);
        let kick = system.diffusion(&x) * &xi;
        x += drift * dt + kick * sqrt_dt;
        if !x.iter().all(|c| c.is_finite() && libm::fabs(*c) <= BLOWUP) {
            return Err(OmError::NumericalBlowup {
                time: t0 + dt * k as f64,
            });
        }
        if !visit(k, &x) {
            break;
        }
    }
    Ok(())
}

/// Euler-Maruyama path on `[t0, tf]` with step `dt`, noise from `seed`.
/// Returns the state at every step (`steps + 1` rows).
pub fn euler_maruyama(system: &SystemModel, x0: &Vector, t0: f64, tf: f64, dt: f64, seed: u64) -> Result<Vec<Vector>> {
    euler_maruyama_stream(system, x0, t0, tf, dt, seed, 0)
}

/// As [`euler_maruyama`] on an explicit stream of the seed.
pub fn euler_maruyama_stream(
    system: &SystemModel,
    x0: &Vector,
    t0: f64,
    tf: f64,
    dt: f64,
    seed: u64,
    stream: u64,
) -> Result<Vec<Vector>> {
    let steps = step_count(t0, tf, dt)?;
    let mut rng = noise_source(seed, stream);
    let mut path = Vec::with_capacity(steps + 1);
    walk(system, x0, dt, steps, &mut rng, t0, |_, x| {
        path.push(x.clone());
        true
    })?;
    Ok(path)
}

#[cfg(feature = "parallel")]
fn map_trials<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_trials<T>(n: usize, f: impl Fn(usize) -> T) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Fine steps per storage interval, at least.
pub const MIN_STRIDE: usize = 10;

/// Sampling controls for [`sample_transitions`].
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingConfig {
    pub dt: f64,
    pub delta: f64,
    pub attempts: usize,
    pub seed: u64,
    /// Nodes of the storage grid; the fine step count must be a multiple of
    /// `n_nodes − 1` with at least [`MIN_STRIDE`] steps per interval.
    pub n_nodes: usize,
}

/// Sample paths that ended within `delta` of the target.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionEnsemble {
    times: Vec<f64>,
    paths: Vec<Vec<Vector>>,
    trials: Vec<u64>,
    attempts: usize,
    delta: f64,
    seed: u64,
    x_target: Vector,
}

impl TransitionEnsemble {
    /// Assembles an ensemble, re-checking that every path ends within
    /// `delta` of the target.
    pub fn from_parts(
        times: Vec<f64>,
        paths: Vec<Vec<Vector>>,
        trials: Vec<u64>,
        attempts: usize,
        delta: f64,
        seed: u64,
        x_target: Vector,
    ) -> Result<Self> {
        if paths.len() > attempts {
            return Err(OmError::InvalidParams(format!(
                "{} accepted paths exceed {attempts} attempts",
                paths.len()
            )));
        }
        if trials.len() != paths.len() {
            return Err(OmError::InvalidParams("one trial id per path required".into()));
        }
        for (i, p) in paths.iter().enumerate() {
            if p.len() != times.len() {
                return Err(OmError::DegenerateGrid(format!("path {i} has {} nodes", p.len())));
            }
            let end = &p[p.len() - 1];
            if end.len() != x_target.len() || !((end - &x_target).norm() <= delta) {
                return Err(OmError::InvalidParams(format!(
                    "path {i} does not end within delta of the target"
                )));
            }
        }
        Ok(Self {
            times,
            paths,
            trials,
            attempts,
            delta,
            seed,
            x_target,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn paths(&self) -> &[Vec<Vector>] {
        &self.paths
    }

    /// Trial (stream) index of every accepted path.
    pub fn trials(&self) -> &[u64] {
        &self.trials
    }

    pub fn attempts(&self) -> usize {
        self.attempts
    }

    pub fn accepted(&self) -> usize {
        self.paths.len()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn x_target(&self) -> &Vector {
        &self.x_target
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.paths.len() as f64 / self.attempts as f64
    }

    pub fn path(&self, i: usize) -> Result<Trajectory> {
        Trajectory::new(self.times.clone(), self.paths[i].clone())
    }
}

/// Runs `attempts` independent paths from `x0` and keeps those with
/// `|X(tf) − x_target| ≤ delta`, decimated to the storage grid. Trials that
/// blow up count as rejected.
pub fn sample_transitions(
    system: &SystemModel,
    x0: &Vector,
    x_target: &Vector,
    t0: f64,
    tf: f64,
    config: &SamplingConfig,
) -> Result<TransitionEnsemble> {
    if !(config.delta > 0.0) {
        return Err(OmError::InvalidParams(format!(
            "delta must be positive, got {}",
            config.delta
        )));
    }
    if config.n_nodes < 2 {
        return Err(OmError::InvalidParams("storage grid needs at least 2 nodes".into()));
    }
    let steps = step_count(t0, tf, config.dt)?;
    if steps % (config.n_nodes - 1) != 0 {
        return Err(OmError::InvalidParams(format!(
            "{steps} steps cannot be decimated onto {} nodes",
            config.n_nodes
        )));
    }
    let stride = steps / (config.n_nodes - 1);
    if stride < MIN_STRIDE {
        return Err(OmError::InvalidParams(format!(
            "dt = {} is coarser than a tenth of the storage spacing",
            config.dt
        )));
    }
    let outcomes = map_trials(config.attempts, |trial| -> Result<Option<Vec<Vector>>> {
        let mut rng = noise_source(config.seed, trial as u64);
        let mut stored = Vec::with_capacity(config.n_nodes);
        let res = walk(system, x0, config.dt, steps, &mut rng, t0, |k, x| {
            if k % stride == 0 {
                stored.push(x.clone());
            }
            true
        });
        match res {
            Ok(()) => {}
            Err(OmError::NumericalBlowup { .. }) => return Ok(None),
            Err(e) => return Err(e),
        }
        let end = &stored[stored.len() - 1];
        Ok(((end - x_target).norm() <= config.delta).then_some(stored))
    });
    let mut paths = Vec::new();
    let mut trials = Vec::new();
    for (trial, outcome) in outcomes.into_iter().enumerate() {
        if let Some(p) = outcome? {
            paths.push(p);
            trials.push(trial as u64);
        }
    }
    if paths.is_empty() {
        return Err(OmError::NoTransitions {
            attempts: config.attempts,
        });
    }
    TransitionEnsemble::from_parts(
        uniform_grid(t0, tf, config.n_nodes),
        paths,
        trials,
        config.attempts,
        config.delta,
        config.seed,
        x_target.clone(),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceMethod {
    /// Per time node and coordinate, the centre of the fullest histogram bin.
    PerSliceMode,
    /// The member path of least Onsager-Machlup action.
    MinAction,
    /// Per time node and coordinate, the sample median.
    PerSliceMedian,
}

/// Type-7 (linear) sample quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Centre of the fullest bin, Freedman-Diaconis width, at least 10 bins.
pub fn histogram_mode(values: &[f64]) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let (lo, hi) = (s[0], s[s.len() - 1]);
    let range = hi - lo;
    if range <= 0.0 {
        return lo;
    }
    let iqr = quantile(&s, 0.75) - quantile(&s, 0.25);
    let width = 2.0 * iqr / libm::cbrt(s.len() as f64);
    let bins = if width > 0.0 {
        (libm::ceil(range / width) as usize).max(10)
    } else {
        10
    };
    let w = range / bins as f64;
    let mut counts = alloc::vec![0usize; bins];
    for &v in &s {
        let k = (((v - lo) / w) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let mut best = 0;
    for k in 1..bins {
        if counts[k] > counts[best] {
            best = k;
        }
    }
    lo + (best as f64 + 0.5) * w
}

fn median(values: &[f64]) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    quantile(&s, 0.5)
}

/// Empirical most probable path of an ensemble.
pub fn reference_path(
    ensemble: &TransitionEnsemble,
    method: ReferenceMethod,
    system: &SystemModel,
) -> Result<Trajectory> {
    let paths = ensemble.paths();
    if paths.is_empty() {
        return Err(OmError::EmptyEnsemble);
    }
    let times = ensemble.times().to_vec();
    let slice_stat = |stat: fn(&[f64]) -> f64| -> Result<Trajectory> {
        let d = paths[0][0].len();
        let states = (0..times.len())
            .map(|j| {
                Vector::from_fn(d, |c, _| {
                    let column: Vec<f64> = paths.iter().map(|p| p[j][c]).collect();
                    stat(&column)
                })
            })
            .collect();
        Trajectory::new(times.clone(), states)
    };
    match method {
        ReferenceMethod::PerSliceMode => slice_stat(histogram_mode),
        ReferenceMethod::PerSliceMedian => slice_stat(median),
        ReferenceMethod::MinAction => {
            let actions = ensemble_actions(ensemble, system)?;
            let mut best = 0;
            for (i, a) in actions.iter().enumerate() {
                if *a < actions[best] {
                    best = i;
                }
            }
            ensemble.path(best)
        }
    }
}

/// Onsager-Machlup action of every ensemble member.
pub fn ensemble_actions(ensemble: &TransitionEnsemble, system: &SystemModel) -> Result<Vec<f64>> {
    map_trials(ensemble.accepted(), |i| om_action(system, &ensemble.path(i)?))
        .into_iter()
        .collect()
}

/// Parameters of a δ-tube estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct TubeConfig {
    pub dt: f64,
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Fraction of fresh paths from `x0` that stay within `delta` (Euclidean
/// distance) of the linearly interpolated reference at every step.
pub fn tube_probability(
    system: &SystemModel,
    reference: &Trajectory,
    x0: &Vector,
    t0: f64,
    tf: f64,
    config: &TubeConfig,
) -> Result<f64> {
    if !(config.delta > 0.0) || config.trials == 0 {
        return Err(OmError::InvalidParams(
            "tube needs delta > 0 and at least one trial".into(),
        ));
    }
    let steps = step_count(t0, tf, config.dt)?;
    let guide: Vec<Vector> = (0..=steps)
        .map(|k| interpolate(reference.times(), reference.states(), t0 + config.dt * k as f64))
        .collect();
    let hits = map_trials(config.trials, |trial| -> Result<bool> {
        let mut rng = noise_source(config.seed, TUBE_STREAMS | trial as u64);
        let mut inside = true;
        let res = walk(system, x0, config.dt, steps, &mut rng, t0, |k, x| {
            inside = (x - &guide[k]).norm() <= config.delta;
            inside
        });
        match res {
            Ok(()) => Ok(inside),
            Err(OmError::NumericalBlowup { .. }) => Ok(false),
            Err(e) => Err(e),
        }
    });
    let mut count = 0usize;
    for h in hits {
        if h? {
            count += 1;
        }
    }
    Ok(count as f64 / config.trials as f64)
}
