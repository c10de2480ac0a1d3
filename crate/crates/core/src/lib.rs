//! Thomas-Fermi angular momentum distribution and related semiclassical and
//! mean-field quantities for large neutral atoms.

// `!(x > 0.0)` is used deliberately so that NaN inputs are rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod madelung;
pub mod meanfield;
pub mod potentials;
pub mod quadrature;
pub mod radial;
pub mod semiclassics;
pub mod tf_solver;

mod ode;

pub use error::{Error, Result};
pub use tf_solver::{load_solution, save_solution, solve_tf, TfSolution};
