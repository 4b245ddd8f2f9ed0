//! Spectrum of the damped wave generator `C z = λ E z`, the imaginary-axis
//! gap, boundary behaviour of eigenvectors, and the Poincaré constant.
//!
//! Eigenvalues are computed from the standard form `B = L⁻¹ C L⁻ᵀ`
//! (`E = L Lᵀ`). Since `B + Bᵀ = L⁻¹(C + Cᵀ)L⁻ᵀ ⪯ 0` for a dissipative pencil,
//! every eigenvalue satisfies `Re λ ≤ 0` and, for an eigenvector `z`,
//!
//! ```text
//! −Re λ · ‖z‖²_E = v_z* Bk2 v_z,
//! ```
//!
//! so eigenvalues on the imaginary axis have eigenvectors with vanishing
//! damped trace.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::assembly::{boundary_mass, mass_matrix, stiffness_matrix, DofMap, OperatorPencil};
use crate::coefficients::{CoefficientSet, Tensor};
use crate::error::{Error, Result};
use crate::linalg::{eig_nonsymmetric, Cholesky, DenseMatrix, LinalgError, Lu, StandardForm};
use crate::mesh::Mesh;

/// Relative tolerance of the per-eigenpair dissipation balance.
pub const BALANCE_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct SpectralReport {
    /// Sorted by `|Im λ|`, then `Im λ`, then `Re λ`.
    pub eigenvalues: Vec<Complex64>,
    /// Pencil eigenvectors `z = (u, v)`, when requested, scaled to `‖z‖_E = 1`.
    pub eigenvectors: Option<Vec<Vec<Complex64>>>,
    /// `max Re λ`.
    pub abscissa: f64,
    /// `min |Re λ|`.
    pub gap: f64,
    pub h: f64,
    /// Number of free nodes; the pencil has order `2·n_free`.
    pub n_free: usize,
    /// `‖Cz − λEz‖ / ‖Ez‖` per eigenpair.
    pub residuals: Vec<f64>,
    /// `‖Bk2 v_z‖ / ‖z‖_E` per eigenpair.
    pub k2_trace_residuals: Vec<f64>,
    /// `‖(S u_z + λ M v_z)|Γ̃‖ / ‖z‖_E`: the Robin flux `B₁z` with the weak
    /// normal trace read off from the discrete equation.
    pub flux_residuals: Vec<f64>,
    /// `−Re(z* C z)` per eigenpair, the boundary (and friction) dissipation.
    pub dissipation: Vec<f64>,
    /// Condition of the real eigenbasis in the energy norm; `None` without
    /// eigenvectors or when the basis is numerically singular.
    pub condition: Option<f64>,
}

impl SpectralReport {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `min |λ|`.
    pub fn min_modulus(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l.norm()).fold(f64::INFINITY, f64::min)
    }

    /// Eigenvalue of largest modulus.
    pub fn extreme(&self) -> Complex64 {
        self.eigenvalues
            .iter()
            .copied()
            .fold(Complex64::new(0.0, 0.0), |a, l| if l.norm() > a.norm() { l } else { a })
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// `index,re,im,residual,k2_trace_residual,flux_residual`.
    pub fn eigenvalues_csv(&self) -> String {
        let mut out = String::from("index,re,im,residual,k2_trace_residual,flux_residual\n");
        let get = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(f64::NAN);
        for (k, l) in self.eigenvalues.iter().enumerate() {
            let _ = writeln!(
                out,
                "{k},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                l.re,
                l.im,
                get(&self.residuals, k),
                get(&self.k2_trace_residuals, k),
                get(&self.flux_residuals, k)
            );
        }
        out
    }

    pub fn write_eigenvalues_csv(&self, path: &Path) -> Result<()> {
        crate::io::write_file(path, &self.eigenvalues_csv())
    }
}

fn cmatvec(m: &DenseMatrix, z: &[Complex64]) -> Vec<Complex64> {
    let re: Vec<f64> = z.iter().map(|c| c.re).collect();
    let im: Vec<f64> = z.iter().map(|c| c.im).collect();
    m.matvec(&re)
        .into_iter()
        .zip(m.matvec(&im))
        .map(|(r, i)| Complex64::new(r, i))
        .collect()
}

fn cnorm(z: &[Complex64]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn cdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn spectrum_order(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.im.abs()
        .total_cmp(&b.im.abs())
        .then(a.im.total_cmp(&b.im))
        .then(a.re.total_cmp(&b.re))
}

/// All `2·n_free` eigenvalues of the pencil, with eigenvector diagnostics
/// when `want_vectors` is set.
pub fn compute_spectrum(pencil: &OperatorPencil, want_vectors: bool) -> Result<SpectralReport> {
    let sf = StandardForm::new(&pencil.gram, &pencil.dynamics)?;
    let set = eig_nonsymmetric(&sf.b, want_vectors)?;
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.sort_by(|&i, &j| spectrum_order(&set.eigenvalues[i], &set.eigenvalues[j]));
    let eigenvalues: Vec<Complex64> = order.iter().map(|&i| set.eigenvalues[i]).collect();
    let abscissa = eigenvalues.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    let mut report = SpectralReport {
        abscissa,
        gap: imaginary_axis_gap_of(&eigenvalues),
        eigenvalues,
        eigenvectors: None,
        h: pencil.h,
        n_free: pencil.n_free(),
        residuals: Vec::new(),
        k2_trace_residuals: Vec::new(),
        flux_residuals: Vec::new(),
        dissipation: Vec::new(),
        condition: None,
    };
    let Some(ws) = set.eigenvectors else {
        return Ok(report);
    };
    let ws: Vec<Vec<Complex64>> = order.iter().map(|&i| ws[i].clone()).collect();
    let n = pencil.n_free();
    let mut zs = Vec::with_capacity(ws.len());
    for (lambda, w) in report.eigenvalues.iter().zip(&ws) {
        // L⁻ᵀ w has unit energy norm because w has unit 2-norm.
        let z = sf.pencil_vector(w);
        let cz = cmatvec(&pencil.dynamics, &z);
        let ez = cmatvec(&pencil.gram, &z);
        let r: Vec<Complex64> = cz.iter().zip(&ez).map(|(c, e)| c - lambda * e).collect();
        report.residuals.push(cnorm(&r) / cnorm(&ez).max(f64::MIN_POSITIVE));
        let zn = cdot(&z, &ez).re.max(0.0).sqrt().max(f64::MIN_POSITIVE);
        let (u, v) = z.split_at(n);
        report.k2_trace_residuals.push(cnorm(&cmatvec(&pencil.damping, v)) / zn);
        let su = cmatvec(&pencil.potential, u);
        let mv = cmatvec(&pencil.mass, v);
        let flux: Vec<Complex64> = pencil.dofs.trace.iter().map(|&i| su[i] + lambda * mv[i]).collect();
        report.flux_residuals.push(cnorm(&flux) / zn);
        report.dissipation.push(-cdot(&z, &cz).re);
        zs.push(z);
    }
    report.condition = basis_condition(&report.eigenvalues, &ws);
    report.eigenvectors = Some(zs);
    Ok(report)
}

/// Frobenius condition number of the real basis `[w_k]` (real
/// eigenvalues) and `[Re w_k, Im w_k]` (one per conjugate pair) of the
/// standard-form eigenvectors. Since `w = Lᵀz`, this is the conditioning
/// of the eigenbasis in the energy norm and bounds
/// `‖e^{tA}‖_X ≤ κ·e^{t·abscissa}`.
fn basis_condition(eigenvalues: &[Complex64], ws: &[Vec<Complex64>]) -> Option<f64> {
    let n = eigenvalues.len();
    if n == 0 {
        return Some(1.0);
    }
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut used = vec![false; n];
    for k in 0..n {
        if used[k] {
            continue;
        }
        used[k] = true;
        let l = eigenvalues[k];
        if l.im == 0.0 {
            cols.push(ws[k].iter().map(|c| c.re).collect());
            continue;
        }
        cols.push(ws[k].iter().map(|c| c.re).collect());
        cols.push(ws[k].iter().map(|c| c.im).collect());
        if let Some(j) = (k + 1..n).find(|&j| !used[j] && eigenvalues[j] == l.conj()) {
            used[j] = true;
        }
    }
    if cols.len() != n {
        return None;
    }
    let mut r = DenseMatrix::zeros(n, n);
    for (j, col) in cols.iter().enumerate() {
        for (i, &x) in col.iter().enumerate() {
            r[(i, j)] = x;
        }
    }
    let inv = Lu::factor(&r).ok()?.solve_matrix(&DenseMatrix::identity(n));
    Some(r.frobenius() * inv.frobenius())
}

fn imaginary_axis_gap_of(eigenvalues: &[Complex64]) -> f64 {
    eigenvalues.iter().map(|l| l.re.abs()).fold(f64::INFINITY, f64::min)
}

/// `min |Re λ|` over the whole computed spectrum.
pub fn imaginary_axis_gap(report: &SpectralReport) -> f64 {
    report.gap
}

/// `min |Re λ|` over eigenvalues with `|Im λ| ≤ max_imag`: the gap of the
/// part of the spectrum the mesh resolves.
pub fn band_gap(report: &SpectralReport, max_imag: f64) -> f64 {
    let band: Vec<Complex64> = report
        .eigenvalues
        .iter()
        .copied()
        .filter(|l| l.im.abs() <= max_imag)
        .collect();
    imaginary_axis_gap_of(&band)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigvecCheck {
    pub index: usize,
    pub eigenvalue: Complex64,
    /// Whether `|Re λ| < axis_tol`, so that the trace conditions apply.
    pub on_axis: bool,
    /// `‖Bk2 v_z‖ / ‖z‖_E`.
    pub r2: f64,
    /// `‖(S u_z + λ M v_z)|Γ̃‖ / ‖z‖_E`.
    pub r1: f64,
    /// `|−Re λ·‖z‖²_E − (−Re z*Cz)| / (‖z‖²_E·max(1, |λ|))`.
    pub balance: f64,
}

/// Per-eigenpair boundary diagnostics. Trace residuals are meaningful for
/// `on_axis` pairs; the balance identity is reported for every pair.
pub fn eigvec_boundary_check(report: &SpectralReport, axis_tol: f64) -> Result<Vec<EigvecCheck>> {
    if report.eigenvectors.is_none() {
        return Err(Error::MissingEigenvectors);
    }
    Ok(report
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(k, &l)| EigvecCheck {
            index: k,
            eigenvalue: l,
            on_axis: l.re.abs() < axis_tol,
            r2: report.k2_trace_residuals[k],
            r1: report.flux_residuals[k],
            // eigenvectors are normalized to ‖z‖_E = 1
            balance: (-l.re - report.dissipation[k]).abs() / l.norm().max(1.0),
        })
        .collect())
}

/// Quadratic-form Poincaré constant `C = λ_min^{-1/2}` of
/// `‖f‖² ≤ C²(‖∇f‖² + ‖k₁^{1/2} f‖²_Γ)`.
///
/// The sum form `‖f‖ ≤ C'(‖∇f‖ + ‖k₁^{1/2} f‖_Γ)` holds with the same `C`,
/// and `C ≤ √2·C'` for the optimal `C'`.
pub fn poincare_constant(mesh: &Mesh, coeffs: &CoefficientSet) -> Result<f64> {
    let k1_active = coeffs.k1.iter().any(|&k| k > 0.0);
    if !mesh.has_dirichlet() && !k1_active {
        return Err(Error::DegeneratePoincareForm);
    }
    let dofs = DofMap::new(mesh);
    let unit = vec![1.0; mesh.n_cells()];
    let identity = vec![Tensor::scalar(mesh.dim, 1.0); mesh.n_cells()];
    let form = dofs
        .reduce(&stiffness_matrix(mesh, &identity))
        .add(&dofs.reduce(&boundary_mass(mesh, &coeffs.k1)?));
    let mass = dofs.reduce(&mass_matrix(mesh, &unit));
    let lambda = smallest_generalized_eigenvalue(&form, &mass)?;
    Ok(1.0 / lambda.sqrt())
}

/// Smallest eigenvalue of `A z = λ M z`, `A`, `M` SPD, by inverse iteration.
fn smallest_generalized_eigenvalue(a: &DenseMatrix, m: &DenseMatrix) -> Result<f64> {
    let fa = Cholesky::factor(a).map_err(|e| match e {
        LinalgError::NotPositiveDefinite { .. } => Error::DegeneratePoincareForm,
        other => Error::Linalg(other),
    })?;
    let n = a.rows();
    // deterministic start with components along every low mode
    let mut z: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64) * 0.7).sin()).collect();
    let mut lambda = f64::INFINITY;
    for _ in 0..10_000 {
        let mz = m.matvec(&z);
        let next = fa.solve(&mz);
        let num = a.bilinear(&next, &next);
        let den = m.bilinear(&next, &next);
        let estimate = num / den;
        let scale = den.sqrt();
        z = next.into_iter().map(|x| x / scale).collect();
        if (lambda - estimate).abs() <= 1e-15 * estimate {
            return Ok(estimate);
        }
        lambda = estimate;
    }
    Ok(lambda)
}

/// One row of a refinement study.
#[derive(Clone, Debug)]
pub struct StudyRow {
    pub h: f64,
    /// Resolution passed to the builder (cells per side).
    pub n: usize,
    pub abscissa: f64,
    pub gap: f64,
    pub extreme: Complex64,
    pub report: SpectralReport,
}

/// Spectra over a list of resolutions. `build` maps a resolution to the
/// assembled pencil.
pub fn refinement_study(
    build: impl Fn(usize) -> Result<OperatorPencil>,
    sizes: &[usize],
    want_vectors: bool,
) -> Result<Vec<StudyRow>> {
    if sizes.len() < 2 {
        return Err(Error::TooFewSizes(sizes.len()));
    }
    sizes
        .iter()
        .map(|&n| {
            let pencil = build(n)?;
            let report = compute_spectrum(&pencil, want_vectors)?;
            Ok(StudyRow {
                h: report.h,
                n,
                abscissa: report.abscissa,
                gap: report.gap,
                extreme: report.extreme(),
                report,
            })
        })
        .collect()
}

/// `h,N,abscissa,gap`.
pub fn study_csv(rows: &[StudyRow]) -> String {
    let mut out = String::from("h,N,abscissa,gap\n");
    for r in rows {
        let _ = writeln!(out, "{:.16e},{},{:.16e},{:.16e}", r.h, r.n, r.abscissa, r.gap);
    }
    out
}
