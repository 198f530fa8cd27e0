//! Line-search minimization under bounded noise with restart conditions.
//!
//! The crate is organized bottom-up:
//!
//! - [`testbed`]: hand-coded unconstrained test problems with analytic gradients,
//!   plus the initial-gradient scaling applied before every run.
//! - [`noise`]: seeded oracles returning noisy function and gradient estimates.
//! - [`linesearch`]: the noise-relaxed backtracking Armijo search.
//! - [`directions`]: steepest descent, PRP+ nonlinear CG and L-BFGS engines.
//! - [`solver`]: the iteration driver with the two-clause restart test.
//! - [`theory`]: complexity constants and a trace verifier.
//! - [`bench`]: experiment sweeps, restart tables and performance/data profiles.
//!
//! ```
//! use noisyls::{solver::{run, SolverConfig}, testbed};
//!
//! let problem = testbed::scale(&testbed::by_name("quad10").unwrap()).unwrap();
//! let result = run(&problem, &SolverConfig::gd(), 7).unwrap();
//! assert!(result.solved);
//! ```

// `!(x >= 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod directions;
mod error;
pub mod linesearch;
pub mod noise;
pub(crate) mod serde_ext;
pub mod solver;
pub mod testbed;
pub mod theory;
pub mod vecops;

pub use error::{Error, Result};
