//! Spectral-geometry toolkit for even-dimensional eta invariants on flat
//! model manifolds.

// `!(x < tol)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clifford;
pub mod cylinder;
pub mod dirac;
pub mod error;
pub mod eta;
pub mod holonomy;
pub mod linalg;
pub mod toeplitz;
pub mod torus;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
