//! Nonsymmetric real eigensolver.
//!
//! Householder reduction to upper Hessenberg form, then Francis double-shift
//! QR on the active window for the eigenvalues. Eigenvectors are recovered by
//! inverse iteration on the Hessenberg matrix in complex arithmetic and mapped
//! back through the accumulated Householder reflectors.

use num_complex::Complex64;

use super::{DenseMatrix, LinalgError};

/// Subdiagonal deflation threshold relative to the neighbouring diagonal entries.
pub const DEFLATION_TOL: f64 = 1e-12;
/// Relative shift applied to an eigenvalue before inverse iteration.
pub const SHIFT_PERTURBATION: f64 = 1e-10;
/// Bound on `‖Bz − λz‖ / ‖z‖` relative to `max(‖B‖_max, 1)`.
pub const RESIDUAL_TOL: f64 = 1e-8;

const SWEEPS_PER_ORDER: usize = 100;
const INVERSE_ITERATIONS: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    /// Total QR sweeps across all deflations.
    pub iterations: usize,
    /// `‖Bz − λz‖ / ‖z‖` per eigenpair; empty when no vectors were requested.
    pub residuals: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexEigenSet {
    pub eigenvalues: Vec<Complex64>,
    /// Unit 2-norm eigenvectors, one per eigenvalue.
    pub eigenvectors: Option<Vec<Vec<Complex64>>>,
    pub report: ConvergenceReport,
}

impl ComplexEigenSet {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.report.residuals.iter().fold(0.0, |m, r| m.max(*r))
    }
}

/// All eigenvalues (and optionally eigenvectors) of a real square matrix.
pub fn eig_nonsymmetric(b: &DenseMatrix, want_vectors: bool) -> Result<ComplexEigenSet, LinalgError> {
    if !b.is_square() {
        return Err(LinalgError::NotSquare {
            rows: b.rows(),
            cols: b.cols(),
        });
    }
    if b.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    let n = b.rows();
    if n == 0 {
        return Ok(ComplexEigenSet {
            eigenvalues: Vec::new(),
            eigenvectors: want_vectors.then(Vec::new),
            report: ConvergenceReport {
                iterations: 0,
                residuals: Vec::new(),
            },
        });
    }

    let (h, q) = hessenberg(b, want_vectors);
    let (eigenvalues, iterations) = hessenberg_qr(&h)?;

    if !want_vectors {
        return Ok(ComplexEigenSet {
            eigenvalues,
            eigenvectors: None,
            report: ConvergenceReport {
                iterations,
                residuals: Vec::new(),
            },
        });
    }

    let q = q.expect("reflectors accumulated when vectors are requested");
    let scale = b.max_abs().max(1.0);
    let mut vectors: Vec<Option<Vec<Complex64>>> = vec![None; n];
    let mut residuals = vec![0.0; n];
    for i in 0..n {
        let lambda = eigenvalues[i];
        // conjugate partner of an already computed vector
        if lambda.im < 0.0 {
            if let Some(j) = (0..i).find(|&j| eigenvalues[j] == lambda.conj() && vectors[j].is_some()) {
                let z: Vec<Complex64> = vectors[j].as_ref().unwrap().iter().map(|c| c.conj()).collect();
                residuals[i] = residuals[j];
                vectors[i] = Some(z);
                continue;
            }
        }
        let y = inverse_iteration(&h, lambda, scale);
        let z = normalize(apply_real(&q, &y));
        let r = residual(b, lambda, &z);
        if !(r <= RESIDUAL_TOL * scale) {
            return Err(LinalgError::EigenvectorResidual {
                index: i,
                residual: r,
            });
        }
        residuals[i] = r;
        vectors[i] = Some(z);
    }

    Ok(ComplexEigenSet {
        eigenvalues,
        eigenvectors: Some(vectors.into_iter().map(Option::unwrap).collect()),
        report: ConvergenceReport {
            iterations,
            residuals,
        },
    })
}

/// Householder reduction `B = Q H Qᵀ`.
fn hessenberg(b: &DenseMatrix, accumulate: bool) -> (DenseMatrix, Option<DenseMatrix>) {
    let n = b.rows();
    let mut h = b.clone();
    let mut q = accumulate.then(|| DenseMatrix::identity(n));
    let mut u = vec![0.0; n];
    let mut f = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let scale: f64 = (k + 1..n).map(|i| h[(i, k)].abs()).sum();
        if scale == 0.0 {
            continue;
        }
        for i in k + 1..n {
            u[i] = h[(i, k)] / scale;
        }
        let sigma: f64 = (k + 1..n).map(|i| u[i] * u[i]).sum::<f64>().sqrt();
        let alpha = if u[k + 1] > 0.0 { -sigma } else { sigma };
        u[k + 1] -= alpha;
        let unorm2: f64 = (k + 1..n).map(|i| u[i] * u[i]).sum();
        if unorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / unorm2;

        // H <- P H, rows k+1.., columns k..
        f[k..n].iter_mut().for_each(|v| *v = 0.0);
        for i in k + 1..n {
            let ui = u[i];
            for (fj, &hij) in f[k..n].iter_mut().zip(&h.row(i)[k..n]) {
                *fj += ui * hij;
            }
        }
        for i in k + 1..n {
            let c = beta * u[i];
            for (hij, &fj) in h.row_mut(i)[k..n].iter_mut().zip(&f[k..n]) {
                *hij -= c * fj;
            }
        }
        // H <- H P and Q <- Q P
        let right = |m: &mut DenseMatrix| {
            for i in 0..n {
                let row = m.row_mut(i);
                let s: f64 = (k + 1..n).map(|j| row[j] * u[j]).sum();
                let c = beta * s;
                for j in k + 1..n {
                    row[j] -= c * u[j];
                }
            }
        };
        right(&mut h);
        if let Some(q) = q.as_mut() {
            right(q);
        }
        h[(k + 1, k)] = alpha * scale;
        for i in k + 2..n {
            h[(i, k)] = 0.0;
        }
    }
    (h, q)
}

/// Francis double-shift QR on an upper Hessenberg matrix, eigenvalues only.
fn hessenberg_qr(h0: &DenseMatrix) -> Result<(Vec<Complex64>, usize), LinalgError> {
    let nn = h0.rows();
    let mut h = h0.clone();
    let mut wr = vec![0.0; nn];
    let mut wi = vec![0.0; nn];
    let mut found = vec![false; nn];

    let norm: f64 = (0..nn)
        .map(|i| (i.saturating_sub(1)..nn).map(|j| h[(i, j)].abs()).sum::<f64>())
        .sum();
    let max_sweeps = SWEEPS_PER_ORDER * nn;

    let mut n = nn as isize - 1;
    let low: isize = 0;
    let mut exshift = 0.0;
    let mut iter = 0usize;
    let mut total = 0usize;
    let (mut p, mut q, mut r, mut s, mut z);
    let (mut x, mut y, mut w);

    macro_rules! at {
        ($i:expr, $j:expr) => {
            h[(($i) as usize, ($j) as usize)]
        };
    }

    while n >= low {
        // look for a single small subdiagonal element
        let mut l = n;
        while l > low {
            s = at!(l - 1, l - 1).abs() + at!(l, l).abs();
            if s == 0.0 {
                s = norm;
            }
            if at!(l, l - 1).abs() <= DEFLATION_TOL * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            at!(n, n) += exshift;
            wr[n as usize] = at!(n, n);
            wi[n as usize] = 0.0;
            found[n as usize] = true;
            n -= 1;
            iter = 0;
        } else if l == n - 1 {
            w = at!(n, n - 1) * at!(n - 1, n);
            p = (at!(n - 1, n - 1) - at!(n, n)) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            at!(n, n) += exshift;
            at!(n - 1, n - 1) += exshift;
            x = at!(n, n);
            let (a, b) = ((n - 1) as usize, n as usize);
            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                wr[a] = x + z;
                wr[b] = wr[a];
                if z != 0.0 {
                    wr[b] = x - w / z;
                }
                wi[a] = 0.0;
                wi[b] = 0.0;
            } else {
                wr[a] = x + p;
                wr[b] = x + p;
                wi[a] = z;
                wi[b] = -z;
            }
            found[a] = true;
            found[b] = true;
            n -= 2;
            iter = 0;
        } else {
            if total >= max_sweeps {
                let partial = (0..nn)
                    .filter(|&i| found[i])
                    .map(|i| Complex64::new(wr[i], wi[i]))
                    .collect();
                return Err(LinalgError::NoConvergence {
                    sweeps: total,
                    partial,
                });
            }

            x = at!(n, n);
            y = at!(n - 1, n - 1);
            w = at!(n, n - 1) * at!(n - 1, n);

            // exceptional shifts
            if iter == 10 {
                exshift += x;
                for i in low..=n {
                    at!(i, i) -= x;
                }
                s = at!(n, n - 1).abs() + at!(n - 1, n - 2).abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in low..=n {
                        at!(i, i) -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;
            total += 1;

            // look for two consecutive small subdiagonal elements
            let mut m = n - 2;
            loop {
                z = at!(m, m);
                r = x - z;
                s = y - z;
                p = (r * s - w) / at!(m + 1, m) + at!(m, m + 1);
                q = at!(m + 1, m + 1) - z - r - s;
                r = at!(m + 2, m + 1);
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if at!(m, m - 1).abs() * (q.abs() + r.abs())
                    < f64::EPSILON
                        * (p.abs() * (at!(m - 1, m - 1).abs() + z.abs() + at!(m + 1, m + 1).abs()))
                {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=n {
                at!(i, i - 2) = 0.0;
                if i > m + 2 {
                    at!(i, i - 3) = 0.0;
                }
            }

            // double QR step on rows/columns l..=n
            for k in m..n {
                let notlast = k != n - 1;
                if k != m {
                    p = at!(k, k - 1);
                    q = at!(k + 1, k - 1);
                    r = if notlast { at!(k + 2, k - 1) } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        at!(k, k - 1) = -s * x;
                    } else if l != m {
                        at!(k, k - 1) = -at!(k, k - 1);
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;

                    for j in k..=n {
                        p = at!(k, j) + q * at!(k + 1, j);
                        if notlast {
                            p += r * at!(k + 2, j);
                            at!(k + 2, j) -= p * z;
                        }
                        at!(k, j) -= p * x;
                        at!(k + 1, j) -= p * y;
                    }
                    let upper = n.min(k + 3);
                    for i in l..=upper {
                        p = x * at!(i, k) + y * at!(i, k + 1);
                        if notlast {
                            p += z * at!(i, k + 2);
                            at!(i, k + 2) -= p * r;
                        }
                        at!(i, k) -= p;
                        at!(i, k + 1) -= p * q;
                    }
                }
            }
        }
    }

    let values = wr
        .into_iter()
        .zip(wi)
        .map(|(re, im)| Complex64::new(re, im))
        .collect();
    Ok((values, total))
}

/// Inverse iteration on `H − σI` for upper Hessenberg `H`, `σ = λ(1 + δ)`.
fn inverse_iteration(h: &DenseMatrix, lambda: Complex64, scale: f64) -> Vec<Complex64> {
    let n = h.rows();
    let shift = if lambda.norm() > 0.0 {
        lambda * (1.0 + SHIFT_PERTURBATION)
    } else {
        Complex64::new(SHIFT_PERTURBATION * scale, 0.0)
    };
    let lu = HessenbergLu::factor(h, shift, scale);

    // deterministic, non-degenerate start vector
    let mut y: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + 0.1 * ((i * 7919) % 13) as f64 / 13.0, 0.0))
        .collect();
    let mut best = (f64::INFINITY, y.clone());
    for _ in 0..INVERSE_ITERATIONS {
        y = normalize(lu.solve(y));
        let r = hessenberg_residual(h, lambda, &y);
        if r < best.0 {
            best = (r, y.clone());
        }
        if r <= f64::EPSILON * scale * n as f64 {
            break;
        }
    }
    best.1
}

struct HessenbergLu {
    a: Vec<Complex64>,
    n: usize,
    swapped: Vec<bool>,
    mult: Vec<Complex64>,
}

impl HessenbergLu {
    fn factor(h: &DenseMatrix, shift: Complex64, scale: f64) -> Self {
        let n = h.rows();
        let tiny = f64::EPSILON * scale;
        let mut a: Vec<Complex64> = h.as_slice().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        for i in 0..n {
            a[i * n + i] -= shift;
        }
        let mut swapped = vec![false; n];
        let mut mult = vec![Complex64::new(0.0, 0.0); n];
        for k in 0..n.saturating_sub(1) {
            if a[(k + 1) * n + k].norm() > a[k * n + k].norm() {
                for j in k..n {
                    a.swap(k * n + j, (k + 1) * n + j);
                }
                swapped[k] = true;
            }
            if a[k * n + k].norm() == 0.0 {
                a[k * n + k] = Complex64::new(tiny, 0.0);
            }
            let m = a[(k + 1) * n + k] / a[k * n + k];
            mult[k] = m;
            a[(k + 1) * n + k] = Complex64::new(0.0, 0.0);
            if m.norm() != 0.0 {
                for j in k + 1..n {
                    let t = a[k * n + j];
                    a[(k + 1) * n + j] -= m * t;
                }
            }
        }
        if n > 0 && a[(n - 1) * n + n - 1].norm() == 0.0 {
            a[(n - 1) * n + n - 1] = Complex64::new(tiny, 0.0);
        }
        Self { a, n, swapped, mult }
    }

    fn solve(&self, mut b: Vec<Complex64>) -> Vec<Complex64> {
        let n = self.n;
        for k in 0..n.saturating_sub(1) {
            if self.swapped[k] {
                b.swap(k, k + 1);
            }
            let t = b[k];
            b[k + 1] -= self.mult[k] * t;
        }
        for i in (0..n).rev() {
            let row = &self.a[i * n..(i + 1) * n];
            let mut s = b[i];
            for j in i + 1..n {
                s -= row[j] * b[j];
            }
            b[i] = s / row[i];
        }
        b
    }
}

fn hessenberg_residual(h: &DenseMatrix, lambda: Complex64, y: &[Complex64]) -> f64 {
    let n = h.rows();
    let mut acc = 0.0;
    for i in 0..n {
        let row = h.row(i);
        let start = i.saturating_sub(1);
        let mut s = -lambda * y[i];
        for j in start..n {
            s += row[j] * y[j];
        }
        acc += s.norm_sqr();
    }
    acc.sqrt()
}

fn apply_real(q: &DenseMatrix, y: &[Complex64]) -> Vec<Complex64> {
    (0..q.rows())
        .map(|i| {
            q.row(i)
                .iter()
                .zip(y)
                .fold(Complex64::new(0.0, 0.0), |acc, (&a, &b)| acc + b * a)
        })
        .collect()
}

fn normalize(mut z: Vec<Complex64>) -> Vec<Complex64> {
    let nrm = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if nrm > 0.0 {
        z.iter_mut().for_each(|c| *c /= nrm);
    }
    z
}

/// `‖Bz − λz‖ / ‖z‖`.
pub fn residual(b: &DenseMatrix, lambda: Complex64, z: &[Complex64]) -> f64 {
    let bz = apply_real(b, z);
    let num = bz
        .iter()
        .zip(z)
        .map(|(bzi, zi)| (bzi - lambda * zi).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let den = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn rotation_generator() {
        let b = DenseMatrix::from_rows(&[[0.0, 1.0], [-1.0, 0.0]]);
        let e = sorted(eig_nonsymmetric(&b, false).unwrap().eigenvalues);
        assert!(close(e[0], Complex64::new(0.0, -1.0), 1e-14));
        assert!(close(e[1], Complex64::new(0.0, 1.0), 1e-14));
    }

    #[test]
    fn damped_oscillator_roots() {
        // λ² + λ + 1 = 0
        let b = DenseMatrix::from_rows(&[[0.0, 1.0], [-1.0, -1.0]]);
        let e = sorted(eig_nonsymmetric(&b, true).unwrap().eigenvalues);
        let im = 3f64.sqrt() / 2.0;
        assert!(close(e[0], Complex64::new(-0.5, -im), 1e-14));
        assert!(close(e[1], Complex64::new(-0.5, im), 1e-14));
    }

    #[test]
    fn diagonal_matrix() {
        let b = DenseMatrix::from_diag(&[3.0, 1.0, 2.0]);
        let set = eig_nonsymmetric(&b, true).unwrap();
        let mut re: Vec<f64> = set.eigenvalues.iter().map(|c| c.re).collect();
        re.sort_by(f64::total_cmp);
        assert_eq!(re, vec![1.0, 2.0, 3.0]);
        assert!(set.max_residual() < 1e-9);
    }

    #[test]
    fn conjugate_pairs_are_exact() {
        let b = DenseMatrix::from_rows(&[
            [1.0, 2.0, -1.0, 0.5],
            [-3.0, 0.2, 4.0, 1.0],
            [0.7, -2.0, 0.0, 3.0],
            [1.5, 0.1, -2.5, -1.0],
        ]);
        let set = eig_nonsymmetric(&b, true).unwrap();
        for l in &set.eigenvalues {
            if l.im != 0.0 {
                assert!(set.eigenvalues.iter().any(|m| *m == l.conj()));
            }
        }
        assert!(set.max_residual() < 1e-10);
    }

    #[test]
    fn empty_matrix() {
        let set = eig_nonsymmetric(&DenseMatrix::zeros(0, 0), true).unwrap();
        assert!(set.is_empty());
    }

    #[test]
    fn rejects_non_square() {
        assert!(eig_nonsymmetric(&DenseMatrix::zeros(2, 3), false).is_err());
    }

    #[test]
    fn skew_symmetric_spectrum_is_imaginary() {
        let n = 30;
        let mut b = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..i {
                let v = ((i * 31 + j * 17) % 11) as f64 - 5.0;
                b[(i, j)] = v;
                b[(j, i)] = -v;
            }
        }
        let set = eig_nonsymmetric(&b, true).unwrap();
        assert_eq!(set.len(), n);
        for l in &set.eigenvalues {
            assert!(l.re.abs() < 1e-10 * b.max_abs());
        }
        assert!(set.max_residual() < 1e-9 * b.max_abs());
    }
}
