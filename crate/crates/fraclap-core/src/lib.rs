//! Lattice discretization of the exterior-Dirichlet fractional Laplacian
//! on boxes and product domains, with solvers and reference oracles.

pub mod error;
pub mod fft;
pub mod forms;
pub mod lattice;
pub mod oracles;
pub mod reduction;
pub mod solvers;
pub mod weights;

pub use error::{FraclapError, Result};
