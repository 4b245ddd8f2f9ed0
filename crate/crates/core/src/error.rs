use thiserror::Error;

use crate::coefficients::ModelError;
use crate::linalg::LinalgError;
use crate::mesh::MeshError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("{what}: expected length {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("boundary coefficient must be nonnegative, got {value} on facet {facet}")]
    NegativeBoundaryCoefficient { facet: usize, value: f64 },
    #[error("invalid time stepping: dt = {dt}, t_end = {t_end}")]
    InvalidTimeStep { dt: f64, t_end: f64 },
    #[error("initial displacement does not vanish on Dirichlet node {node}")]
    InitialDataNotAdmissible { node: usize },
    #[error("contraction violated at step {step}: norm grew from {before:e} to {after:e}")]
    ContractionViolated { step: usize, before: f64, after: f64 },
    #[error("generator is singular: {0}")]
    SingularGenerator(LinalgError),
    #[error("spectral abscissa {abscissa:e} is positive for a dissipative model")]
    PositiveAbscissa { abscissa: f64 },
    #[error("eigenvectors were not computed")]
    MissingEigenvectors,
    #[error("Poincaré form is degenerate: no Dirichlet boundary and k1 vanishes identically")]
    DegeneratePoincareForm,
    #[error("refinement study needs at least two mesh sizes, got {0}")]
    TooFewSizes(usize),
    #[error("config has no [{0}] section")]
    MissingSection(&'static str),
    #[error("{what} = {value:e} exceeds tolerance {tol:e}")]
    InvariantViolated { what: &'static str, value: f64, tol: f64 },
    #[error("config: {0}")]
    Config(#[from] crate::config::ConfigErrors),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
