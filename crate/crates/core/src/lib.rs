//! Thermal radiative transfer in two dimensions: a macro–micro IMEX scheme
//! on a staggered grid, its rank-adaptive low-rank counterpart and the
//! Rosseland diffusion limit.

pub mod boundary;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod full_solver;
pub mod grid;
pub mod linalg;
pub mod lowrank;
pub mod newton;
pub mod problem;
pub mod quadrature;
pub mod rosseland;
pub mod run;
pub mod scenario;
pub mod sparse;

pub use error::{Error, Result};
