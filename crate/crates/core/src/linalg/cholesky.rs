use super::{DenseMatrix, LinalgError};

/// Relative pivot floor below which a matrix is declared not positive definite.
pub const PIVOT_FLOOR: f64 = 1e-14;

/// `M = L Lᵀ` factorization of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: DenseMatrix,
}

impl Cholesky {
    pub fn factor(m: &DenseMatrix) -> Result<Self, LinalgError> {
        if !m.is_square() {
            return Err(LinalgError::NotSquare {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        if !m.is_symmetric(1e-12) {
            return Err(LinalgError::NotSymmetric);
        }
        let n = m.rows();
        let floor = PIVOT_FLOOR * m.max_abs();
        let mut l = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let lj = l.row(j);
            let d = m[(j, j)] - lj[..j].iter().map(|v| v * v).sum::<f64>();
            if !(d > floor) {
                return Err(LinalgError::NotPositiveDefinite { index: j, pivot: d });
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in j + 1..n {
                let s: f64 = (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum();
                l[(i, j)] = (m[(i, j)] - s) / djj;
            }
        }
        Ok(Self { l })
    }

    pub fn l(&self) -> &DenseMatrix {
        &self.l
    }

    pub fn into_l(self) -> DenseMatrix {
        self.l
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// Solves `L y = b`.
    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y = b.to_vec();
        for i in 0..n {
            let row = self.l.row(i);
            let s: f64 = row[..i].iter().zip(&y[..i]).map(|(a, b)| a * b).sum();
            y[i] = (y[i] - s) / row[i];
        }
        y
    }

    /// Solves `Lᵀ x = y`.
    pub fn backward(&self, y: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut x = y.to_vec();
        for i in (0..n).rev() {
            x[i] /= self.l[(i, i)];
            let xi = x[i];
            let row = self.l.row(i);
            for k in 0..i {
                x[k] -= row[k] * xi;
            }
        }
        x
    }

    /// Solves `M x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.backward(&self.forward(b))
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(m: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    Cholesky::factor(m).map(Cholesky::into_l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_factor_is_identity() {
        let l = cholesky(&DenseMatrix::identity(3)).unwrap();
        assert_eq!(l, DenseMatrix::identity(3));
    }

    #[test]
    fn two_by_two_hand_elimination() {
        // l11 = 2, l21 = 2/2 = 1, l22 = sqrt(2 - 1) = 1
        let m = DenseMatrix::from_rows(&[[4.0, 2.0], [2.0, 2.0]]);
        let l = cholesky(&m).unwrap();
        let expected = DenseMatrix::from_rows(&[[2.0, 0.0], [1.0, 1.0]]);
        for i in 0..2 {
            for j in 0..2 {
                assert!((l[(i, j)] - expected[(i, j)]).abs() < 1e-15);
            }
        }
        let back = l.matmul(&l.transpose());
        for i in 0..2 {
            for j in 0..2 {
                assert!((back[(i, j)] - m[(i, j)]).abs() <= 1e-12 * m.max_abs());
            }
        }
    }

    #[test]
    fn indefinite_is_rejected() {
        let m = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]);
        assert!(matches!(
            cholesky(&m),
            Err(LinalgError::NotPositiveDefinite { index: 1, .. })
        ));
    }

    #[test]
    fn semidefinite_is_rejected() {
        let m = DenseMatrix::from_rows(&[[1.0, -1.0], [-1.0, 1.0]]);
        assert!(cholesky(&m).is_err());
    }

    #[test]
    fn solve_round_trips() {
        let m = DenseMatrix::from_rows(&[[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]]);
        let b = [1.0, -2.0, 0.5];
        let x = Cholesky::factor(&m).unwrap().solve(&b);
        let r = m.matvec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-14);
        }
    }
}
