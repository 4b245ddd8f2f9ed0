//! Finite element discretization of the wave equation in Lagrange form with
//! split Dirichlet / Neumann / Robin / damping boundary conditions.
//!
//! The discrete operator keeps its boundary-triple structure exactly: a
//! discrete Green identity, a surjective pair of boundary maps, and a
//! dissipative generator pencil whose Cayley transform is a contraction.
//! On top of that the crate computes spectra, imaginary-axis gaps,
//! Poincaré constants and weighted Helmholtz decompositions.

pub mod assembly;
pub mod cli;
pub mod coefficients;
pub mod config;
mod error;
pub mod linalg;
pub mod helmholtz;
pub mod io;
pub mod mesh;
pub mod semigroup;
pub mod spectral;

pub use error::{Error, Result};
