//! Dense linear algebra kernels: Cholesky, pivoted LU, and a nonsymmetric
//! eigensolver, plus the reduction of a symmetric-definite pencil to a
//! standard eigenproblem.

mod cholesky;
mod eigen;
mod lu;
mod matrix;

pub use cholesky::{cholesky, Cholesky, PIVOT_FLOOR};
pub use eigen::{
    eig_nonsymmetric, residual as eigen_residual, ComplexEigenSet, ConvergenceReport, DEFLATION_TOL,
    RESIDUAL_TOL, SHIFT_PERTURBATION,
};
pub use lu::{determinant, lu_solve, Lu};
pub use matrix::{dot, norm2, DenseMatrix};

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("matrix is singular to working precision (column {index})")]
    Singular { index: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("QR iteration did not converge after {sweeps} sweeps ({} eigenvalues found)", partial.len())]
    NoConvergence { sweeps: usize, partial: Vec<Complex64> },
    #[error("eigenvector {index} residual {residual:e} exceeds tolerance")]
    EigenvectorResidual { index: usize, residual: f64 },
}

/// Reduction of the pencil `C z = λ E z` (E symmetric positive definite)
/// to the standard problem `B w = λ w` with `B = L⁻¹ C L⁻ᵀ`, `E = L Lᵀ`,
/// and `z = L⁻ᵀ w`.
#[derive(Clone, Debug)]
pub struct StandardForm {
    pub b: DenseMatrix,
    pub factor: Cholesky,
}

impl StandardForm {
    pub fn new(e: &DenseMatrix, c: &DenseMatrix) -> Result<Self, LinalgError> {
        let factor = Cholesky::factor(e)?;
        let n = factor.dim();
        assert_eq!((c.rows(), c.cols()), (n, n), "pencil shape mismatch");
        // Y = L⁻¹ C, then Bᵀ = L⁻¹ Yᵀ
        let mut y = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let col = factor.forward(&c.column(j));
            for (i, v) in col.into_iter().enumerate() {
                y[(i, j)] = v;
            }
        }
        let mut b = DenseMatrix::zeros(n, n);
        for i in 0..n {
            // row i of B = (L⁻¹ (row i of Y)ᵀ)ᵀ
            let row = factor.forward(y.row(i));
            b.row_mut(i).copy_from_slice(&row);
        }
        Ok(Self { b, factor })
    }

    /// Maps a standard-problem eigenvector `w` back to the pencil, `z = L⁻ᵀ w`.
    pub fn pencil_vector(&self, w: &[Complex64]) -> Vec<Complex64> {
        let re: Vec<f64> = w.iter().map(|c| c.re).collect();
        let im: Vec<f64> = w.iter().map(|c| c.im).collect();
        let zr = self.factor.backward(&re);
        let zi = self.factor.backward(&im);
        zr.into_iter().zip(zi).map(|(r, i)| Complex64::new(r, i)).collect()
    }
}

/// `B = L⁻¹ C L⁻ᵀ` where `E = L Lᵀ`.
pub fn generalized_to_standard(e: &DenseMatrix, c: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    StandardForm::new(e, c).map(|s| s.b)
}
