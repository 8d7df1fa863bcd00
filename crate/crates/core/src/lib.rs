//! Most probable transition pathways of stochastic differential equations.
//!
//! The Onsager-Machlup action of an SDE `dX = b̃(X) dt + σ(X) dB` is recast as
//! a fixed-time Bolza optimal-control problem with dynamics `ẋ = b̃(x) + σ(x)θ`,
//! and the resulting Pontryagin system is solved by a damped method of
//! successive approximations. A Euler-Maruyama harness provides independent
//! Monte Carlo checks.
//!
//! The crate is `no_std` (with `alloc`). The `parallel` feature pulls in `std`
//! and spreads Monte Carlo trials over a rayon pool without changing results.
#![cfg_attr(not(any(test, feature = "std")), no_std)]
#![forbid(unsafe_code)]
// `!(a > b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod fd;
pub mod geometry;
pub mod model;
pub mod monte_carlo;
pub mod problem;
pub mod solver;
pub mod systems;
pub mod trajectory;

pub use error::{OmError, Result};
pub use geometry::{Christoffel, GeometryPoint};
pub use model::{Matrix, SystemModel, Vector};
pub use problem::{ControlProblem, TerminalCost};
pub use solver::{InitialControl, IterationRecord, SolverConfig, SolverReport, StopReason};
pub use trajectory::Trajectory;
