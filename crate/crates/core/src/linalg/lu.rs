use super::{DenseMatrix, LinalgError};

/// LU factorization with partial pivoting, `P M = L U`.
#[derive(Clone, Debug)]
pub struct Lu {
    lu: DenseMatrix,
    perm: Vec<usize>,
    swaps: usize,
}

impl Lu {
    pub fn factor(m: &DenseMatrix) -> Result<Self, LinalgError> {
        if !m.is_square() {
            return Err(LinalgError::NotSquare {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        let n = m.rows();
        let floor = n as f64 * f64::EPSILON * m.max_abs();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |acc, c| if c.1 > acc.1 { c } else { acc });
            if !(pmax > floor) {
                return Err(LinalgError::Singular { index: k });
            }
            if p != k {
                swap_rows(&mut lu, p, k);
                perm.swap(p, k);
                swaps += 1;
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                if f == 0.0 {
                    continue;
                }
                lu[(i, k)] = f;
                let (upper, lower) = lu.as_mut_slice().split_at_mut(i * n);
                let src = &upper[k * n + k + 1..k * n + n];
                for (dst, &s) in lower[k + 1..n].iter_mut().zip(src) {
                    *dst -= f * s;
                }
            }
        }
        Ok(Self { lu, perm, swaps })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n, "rhs dimension mismatch");
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: f64 = row[..i].iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: f64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(a, b)| a * b).sum();
            x[i] = (x[i] - s) / row[i];
        }
        x
    }

    pub fn solve_matrix(&self, b: &DenseMatrix) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            let x = self.solve(&b.column(j));
            for (i, v) in x.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }

    pub fn determinant(&self) -> f64 {
        let sign = if self.swaps % 2 == 0 { 1.0 } else { -1.0 };
        (0..self.dim()).fold(sign, |acc, i| acc * self.lu[(i, i)])
    }
}

fn swap_rows(m: &mut DenseMatrix, a: usize, b: usize) {
    let n = m.cols();
    let (lo, hi) = (a.min(b), a.max(b));
    let (first, second) = m.as_mut_slice().split_at_mut(hi * n);
    first[lo * n..lo * n + n].swap_with_slice(&mut second[..n]);
}

/// Solves `M x = rhs` by partial-pivoting LU.
pub fn lu_solve(m: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
    Ok(Lu::factor(m)?.solve(rhs))
}

/// Determinant via LU; zero for matrices singular to working precision.
pub fn determinant(m: &DenseMatrix) -> Result<f64, LinalgError> {
    match Lu::factor(m) {
        Ok(lu) => Ok(lu.determinant()),
        Err(LinalgError::Singular { .. }) => Ok(0.0),
        Err(e) => Err(e),
    }
}
