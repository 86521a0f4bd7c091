//! Periodic one-dimensional finite-volume simulator for the Aw-Rascle system
//! with offset `w - u = d_x rho^gamma`, together with the diagnostics needed
//! to watch its hard-congestion limit `gamma -> infinity`.
//!
//! * [`grid`]: uniform mesh on the unit torus and discrete calculus
//! * [`model`]: constitutive functions, states, `u <-> w` conversions
//! * [`solver`]: IMEX stepping for both formulations, `W` transport, runs
//! * [`diagnostics`]: energy balances, bounds and limit residuals
//! * [`sweep`]: matched runs over a sequence of `gamma`
//! * [`verify`]: manufactured solutions, convergence studies, dense oracles
//! * [`cli`]: configuration files, output formats, subcommands

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod model;
pub mod solver;
pub mod sweep;
pub mod tolerances;
pub mod verify;

pub use error::{Result, SimError};
pub use grid::{Field, Grid};
pub use model::{Formulation, ModelParams, State};
pub use solver::{run_simulation, SchemeConfig, Trajectory};
