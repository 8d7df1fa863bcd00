use alloc::string::String;

pub type Result<T, E = OmError> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OmError {
    #[error("diffusion is singular: smallest eigenvalue of σσᵀ is {min_eigenvalue:e}")]
    SingularDiffusion { min_eigenvalue: f64 },

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid horizon: tf ({tf}) must exceed t0 ({t0})")]
    InvalidHorizon { t0: f64, tf: f64 },

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("numerical blow-up at t = {time}: a state component exceeded 1e8")]
    NumericalBlowup { time: f64 },

    #[error("solver diverged: blow-up persisted at the minimal damping {eta:e}")]
    Diverged { eta: f64 },

    #[error("Hamiltonian ascent stalled with |∇θH| = {gradient_norm:e}")]
    AscentStall { gradient_norm: f64 },

    #[error("{what} disagrees with finite differences (relative error {relative_error:e})")]
    DerivativeMismatch { what: &'static str, relative_error: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("noise intensity must be positive, got {0}")]
    NonpositiveNoise(f64),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("no transitions accepted out of {attempts} attempts")]
    NoTransitions { attempts: usize },

    #[error("ensemble is empty")]
    EmptyEnsemble,
}
