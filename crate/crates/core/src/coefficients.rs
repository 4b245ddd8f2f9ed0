//! Material coefficients `T`, `ρ`, `a`, `b` (cellwise constant) and boundary
//! coefficients `k₁`, `k₂` (facetwise constant).

use thiserror::Error;

use crate::mesh::{validate_mesh, BoundaryLabel, Mesh, MeshError, Point};

/// Symmetric `d×d` modulus tensor, `d ∈ {1, 2}`, row-major.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Tensor {
    dim: usize,
    m: [f64; 4],
}

impl Tensor {
    /// `v · I` in dimension `dim`.
    pub fn scalar(dim: usize, v: f64) -> Self {
        match dim {
            1 => Self { dim, m: [v, 0.0, 0.0, 0.0] },
            _ => Self { dim: 2, m: [v, 0.0, 0.0, v] },
        }
    }

    pub fn from_2x2(xx: f64, xy: f64, yx: f64, yy: f64) -> Self {
        Self {
            dim: 2,
            m: [xx, xy, yx, yy],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i * 2 + j]
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            m: self.m.map(|v| v * s),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.dim == 1 || (self.m[1] - self.m[2]).abs() <= 1e-14 * self.m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Smallest and largest eigenvalue of the symmetric part.
    pub fn eigen_range(&self) -> (f64, f64) {
        if self.dim == 1 {
            return (self.m[0], self.m[0]);
        }
        let (a, b, d) = (self.m[0], 0.5 * (self.m[1] + self.m[2]), self.m[3]);
        let mean = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        (mean - rad, mean + rad)
    }

    /// `T x` for `x` of length `dim`.
    pub fn apply(&self, x: &[f64]) -> [f64; 2] {
        if self.dim == 1 {
            [self.m[0] * x[0], 0.0]
        } else {
            [
                self.m[0] * x[0] + self.m[1] * x[1],
                self.m[2] * x[0] + self.m[3] * x[1],
            ]
        }
    }

    pub fn inverse(&self) -> Tensor {
        if self.dim == 1 {
            return Tensor::scalar(1, 1.0 / self.m[0]);
        }
        let det = self.m[0] * self.m[3] - self.m[1] * self.m[2];
        Tensor {
            dim: 2,
            m: [self.m[3] / det, -self.m[1] / det, -self.m[2] / det, self.m[0] / det],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("coefficient arrays do not match the mesh ({0})")]
    SizeMismatch(&'static str),
    #[error("non-finite {what} coefficient on {location} {index}")]
    NonFinite {
        what: &'static str,
        location: &'static str,
        index: usize,
    },
    #[error("T is not symmetric on cell {cell}")]
    NonSymmetricModulus { cell: usize },
    #[error("T is not positive definite on cell {cell} (smallest eigenvalue {min:e})")]
    NonPositiveModulus { cell: usize, min: f64 },
    #[error("rho must be positive, got {value} on cell {cell}")]
    NonPositiveDensity { cell: usize, value: f64 },
    #[error("{which} must be nonnegative, got {value} on facet {facet}")]
    NegativeBoundaryCoefficient {
        which: &'static str,
        facet: usize,
        value: f64,
    },
    #[error("{which} is nonzero on facet {facet} whose label {label} does not carry it")]
    InactiveBoundaryCoefficient {
        which: &'static str,
        facet: usize,
        label: BoundaryLabel,
    },
    #[error("{what} on cell {cell} lies outside the bound [1/c, c] with c = {bound}")]
    OutOfBound {
        what: &'static str,
        cell: usize,
        bound: f64,
    },
    #[error("degenerate energy norm: no Dirichlet boundary (G0) and k1 vanishes identically")]
    DegenerateEnergyNorm,
}

/// Sampled coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSet {
    /// Modulus `T` per cell.
    pub modulus: Vec<Tensor>,
    /// Density `ρ` per cell.
    pub rho: Vec<f64>,
    /// Zeroth-order coefficient `a` per cell.
    pub a: Vec<f64>,
    /// Friction coefficient `b` per cell.
    pub b: Vec<f64>,
    /// Robin coefficient per boundary facet; zero where the label does not carry it.
    pub k1: Vec<f64>,
    /// Damping coefficient per boundary facet; zero where the label does not carry it.
    pub k2: Vec<f64>,
    /// `c` with `c⁻¹ ≤ T, ρ ≤ c` cellwise.
    pub bound: f64,
}

type ScalarField<'a> = Box<dyn Fn(Point) -> f64 + 'a>;
type BoundaryField<'a> = Box<dyn Fn(BoundaryLabel, Point) -> f64 + 'a>;

/// Coordinate functions to be sampled at cell and facet midpoints.
pub struct CoefficientFields<'a> {
    pub modulus: Box<dyn Fn(Point) -> Tensor + 'a>,
    pub rho: ScalarField<'a>,
    pub a: ScalarField<'a>,
    pub b: ScalarField<'a>,
    pub k1: BoundaryField<'a>,
    pub k2: BoundaryField<'a>,
}

impl<'a> CoefficientFields<'a> {
    /// `T = t·I`, `ρ = rho`, everything else zero.
    pub fn constant(dim: usize, t: f64, rho: f64) -> Self {
        Self {
            modulus: Box::new(move |_| Tensor::scalar(dim, t)),
            rho: Box::new(move |_| rho),
            a: Box::new(|_| 0.0),
            b: Box::new(|_| 0.0),
            k1: Box::new(|_, _| 0.0),
            k2: Box::new(|_, _| 0.0),
        }
    }

    pub fn with_modulus(mut self, f: impl Fn(Point) -> Tensor + 'a) -> Self {
        self.modulus = Box::new(f);
        self
    }

    pub fn with_rho(mut self, f: impl Fn(Point) -> f64 + 'a) -> Self {
        self.rho = Box::new(f);
        self
    }

    pub fn with_a(mut self, f: impl Fn(Point) -> f64 + 'a) -> Self {
        self.a = Box::new(f);
        self
    }

    pub fn with_b(mut self, f: impl Fn(Point) -> f64 + 'a) -> Self {
        self.b = Box::new(f);
        self
    }

    pub fn with_k1(mut self, f: impl Fn(BoundaryLabel, Point) -> f64 + 'a) -> Self {
        self.k1 = Box::new(f);
        self
    }

    pub fn with_k2(mut self, f: impl Fn(BoundaryLabel, Point) -> f64 + 'a) -> Self {
        self.k2 = Box::new(f);
        self
    }
}

/// Samples every field at cell / facet midpoints.
///
/// `k₁` is sampled only on `G2`/`G4` facets and `k₂` only on `G3`/`G4`
/// facets; elsewhere they are zero, as the label fixes the boundary condition.
pub fn sample_coefficients(mesh: &Mesh, fields: &CoefficientFields<'_>) -> Result<CoefficientSet, ModelError> {
    let n_cells = mesh.n_cells();
    let mut modulus = Vec::with_capacity(n_cells);
    let mut rho = Vec::with_capacity(n_cells);
    let mut a = Vec::with_capacity(n_cells);
    let mut b = Vec::with_capacity(n_cells);
    for cell in 0..n_cells {
        let p = mesh.cell_midpoint(cell);
        let t = (fields.modulus)(p);
        let t = if mesh.dim == 1 { Tensor::scalar(1, t.get(0, 0)) } else { t };
        modulus.push(t);
        rho.push((fields.rho)(p));
        a.push((fields.a)(p));
        b.push((fields.b)(p));
    }
    let mut k1 = vec![0.0; mesh.facets.len()];
    let mut k2 = vec![0.0; mesh.facets.len()];
    for (f, facet) in mesh.facets.iter().enumerate() {
        let Some(label) = facet.label else { continue };
        let p = mesh.facet_midpoint(f);
        if label.carries_k1() {
            k1[f] = (fields.k1)(label, p);
        }
        if label.carries_k2() {
            k2[f] = (fields.k2)(label, p);
        }
    }

    let mut set = CoefficientSet {
        modulus,
        rho,
        a,
        b,
        k1,
        k2,
        bound: 1.0,
    };
    check_pointwise(mesh, &set)?;
    set.bound = compute_bound(&set);
    Ok(set)
}

fn compute_bound(set: &CoefficientSet) -> f64 {
    let mut c: f64 = 1.0;
    for (t, &r) in set.modulus.iter().zip(&set.rho) {
        let (lo, hi) = t.eigen_range();
        c = c.max(hi).max(1.0 / lo).max(r).max(1.0 / r);
    }
    c
}

fn check_pointwise(mesh: &Mesh, set: &CoefficientSet) -> Result<(), ModelError> {
    let n_cells = mesh.n_cells();
    let n_facets = mesh.facets.len();
    if set.modulus.len() != n_cells || set.rho.len() != n_cells || set.a.len() != n_cells || set.b.len() != n_cells {
        return Err(ModelError::SizeMismatch("cell fields"));
    }
    if set.k1.len() != n_facets || set.k2.len() != n_facets {
        return Err(ModelError::SizeMismatch("facet fields"));
    }
    for cell in 0..n_cells {
        let t = &set.modulus[cell];
        if t.dim() != mesh.dim {
            return Err(ModelError::SizeMismatch("modulus dimension"));
        }
        let nonfinite = |what| ModelError::NonFinite {
            what,
            location: "cell",
            index: cell,
        };
        if t.m.iter().any(|v| !v.is_finite()) {
            return Err(nonfinite("T"));
        }
        for (what, v) in [("rho", set.rho[cell]), ("a", set.a[cell]), ("b", set.b[cell])] {
            if !v.is_finite() {
                return Err(nonfinite(what));
            }
        }
        if !t.is_symmetric() {
            return Err(ModelError::NonSymmetricModulus { cell });
        }
        let (min, _) = t.eigen_range();
        if !(min > 0.0) {
            return Err(ModelError::NonPositiveModulus { cell, min });
        }
        if !(set.rho[cell] > 0.0) {
            return Err(ModelError::NonPositiveDensity {
                cell,
                value: set.rho[cell],
            });
        }
    }
    for facet in 0..n_facets {
        for (which, v) in [("k1", set.k1[facet]), ("k2", set.k2[facet])] {
            if !v.is_finite() {
                return Err(ModelError::NonFinite {
                    what: which,
                    location: "facet",
                    index: facet,
                });
            }
            if v < 0.0 {
                return Err(ModelError::NegativeBoundaryCoefficient { which, facet, value: v });
            }
        }
    }
    Ok(())
}

/// Outcome of a successful [`validate_model`].
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct ModelFlags {
    /// `k₂ > 0` on at least one facet.
    pub damped: bool,
}

/// Checks the standing assumptions on a mesh / coefficient pair.
pub fn validate_model(mesh: &Mesh, coeffs: &CoefficientSet) -> Result<ModelFlags, ModelError> {
    validate_mesh(mesh)?;
    check_pointwise(mesh, coeffs)?;
    let c = coeffs.bound;
    let slack = 1.0 + 1e-12;
    for (cell, (t, &r)) in coeffs.modulus.iter().zip(&coeffs.rho).enumerate() {
        let (lo, hi) = t.eigen_range();
        if hi > c * slack || lo * c * slack < 1.0 {
            return Err(ModelError::OutOfBound { what: "T", cell, bound: c });
        }
        if r > c * slack || r * c * slack < 1.0 {
            return Err(ModelError::OutOfBound { what: "rho", cell, bound: c });
        }
    }
    for (facet, f) in mesh.facets.iter().enumerate() {
        let label = f.label.expect("validated mesh has labeled facets");
        if coeffs.k1[facet] != 0.0 && !label.carries_k1() {
            return Err(ModelError::InactiveBoundaryCoefficient { which: "k1", facet, label });
        }
        if coeffs.k2[facet] != 0.0 && !label.carries_k2() {
            return Err(ModelError::InactiveBoundaryCoefficient { which: "k2", facet, label });
        }
    }
    if !mesh.has_dirichlet() && coeffs.k1.iter().all(|&k| k == 0.0) {
        return Err(ModelError::DegenerateEnergyNorm);
    }
    Ok(ModelFlags {
        damped: coeffs.k2.iter().any(|&k| k > 0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_interval_mesh, build_rect_mesh, PartitionSpec, Side};
    use BoundaryLabel::*;

    #[test]
    fn constants_on_interval() {
        let m = build_interval_mesh(4, Gamma0, Gamma1).unwrap();
        let c = sample_coefficients(&m, &CoefficientFields::constant(1, 1.0, 1.0)).unwrap();
        assert!(c.modulus.iter().all(|t| t.get(0, 0) == 1.0));
        assert!(c.rho.iter().all(|&r| r == 1.0));
        assert_eq!(c.bound, 1.0);
    }

    #[test]
    fn midpoint_sampling() {
        let m = build_interval_mesh(4, Gamma0, Gamma1).unwrap();
        let f = CoefficientFields::constant(1, 1.0, 1.0).with_modulus(|p| Tensor::scalar(1, 1.0 + p[0]));
        let c = sample_coefficients(&m, &f).unwrap();
        let t: Vec<f64> = c.modulus.iter().map(|t| t.get(0, 0)).collect();
        assert_eq!(t, vec![1.125, 1.375, 1.625, 1.875]);
        assert_eq!(c.bound, 1.875);
    }

    #[test]
    fn negative_k2_rejected() {
        let m = build_interval_mesh(4, Gamma0, Gamma3).unwrap();
        let f = CoefficientFields::constant(1, 1.0, 1.0).with_k2(|_, _| -1.0);
        assert!(matches!(
            sample_coefficients(&m, &f),
            Err(ModelError::NegativeBoundaryCoefficient { which: "k2", .. })
        ));
    }

    #[test]
    fn asymmetric_modulus_rejected() {
        let m = build_rect_mesh(2, 2, &PartitionSpec::uniform(Gamma0)).unwrap();
        let f = CoefficientFields::constant(2, 1.0, 1.0).with_modulus(|_| Tensor::from_2x2(2.0, 0.5, 0.0, 2.0));
        assert!(matches!(
            sample_coefficients(&m, &f),
            Err(ModelError::NonSymmetricModulus { cell: 0 })
        ));
        let f = CoefficientFields::constant(2, 1.0, 1.0).with_modulus(|_| Tensor::from_2x2(1.0, 2.0, 2.0, 1.0));
        assert!(matches!(
            sample_coefficients(&m, &f),
            Err(ModelError::NonPositiveModulus { .. })
        ));
    }

    #[test]
    fn negative_density_rejected() {
        let m = build_interval_mesh(3, Gamma0, Gamma1).unwrap();
        let f = CoefficientFields::constant(1, 1.0, 1.0).with_rho(|p| p[0] - 0.5);
        assert!(matches!(
            sample_coefficients(&m, &f),
            Err(ModelError::NonPositiveDensity { cell: 0, .. })
        ));
    }

    #[test]
    fn anchored_undamped_is_valid() {
        let m = build_interval_mesh(4, Gamma0, Gamma1).unwrap();
        let c = sample_coefficients(&m, &CoefficientFields::constant(1, 1.0, 1.0)).unwrap();
        assert_eq!(validate_model(&m, &c), Ok(ModelFlags { damped: false }));
    }

    #[test]
    fn floating_without_robin_is_degenerate() {
        let m = build_interval_mesh(4, Gamma1, Gamma3).unwrap();
        let f = CoefficientFields::constant(1, 1.0, 1.0).with_k2(|_, _| 1.0);
        let c = sample_coefficients(&m, &f).unwrap();
        assert_eq!(validate_model(&m, &c), Err(ModelError::DegenerateEnergyNorm));
    }

    #[test]
    fn robin_anchor_with_damping() {
        let m = build_interval_mesh(4, Gamma2, Gamma3).unwrap();
        let f = CoefficientFields::constant(1, 1.0, 1.0)
            .with_k1(|_, _| 1.0)
            .with_k2(|_, _| 1.0);
        let c = sample_coefficients(&m, &f).unwrap();
        assert_eq!(c.k1, vec![1.0, 0.0]);
        assert_eq!(c.k2, vec![0.0, 1.0]);
        assert_eq!(validate_model(&m, &c), Ok(ModelFlags { damped: true }));
    }

    #[test]
    fn inactive_coefficient_rejected() {
        let m = build_interval_mesh(4, Gamma0, Gamma1).unwrap();
        let mut c = sample_coefficients(&m, &CoefficientFields::constant(1, 1.0, 1.0)).unwrap();
        c.k2[1] = 2.0;
        assert!(matches!(
            validate_model(&m, &c),
            Err(ModelError::InactiveBoundaryCoefficient { which: "k2", .. })
        ));
    }

    #[test]
    fn bound_is_enforced() {
        let m = build_interval_mesh(2, Gamma0, Gamma1).unwrap();
        let mut c = sample_coefficients(&m, &CoefficientFields::constant(1, 1.0, 1.0)).unwrap();
        c.rho[1] = 3.0;
        assert!(matches!(validate_model(&m, &c), Err(ModelError::OutOfBound { what: "rho", .. })));
    }

    #[test]
    fn labels_mask_boundary_fields_in_2d() {
        let spec = PartitionSpec::uniform(Gamma1)
            .with_side(Side::Left, Gamma0)
            .with_side(Side::Right, Gamma4)
            .with_side(Side::Top, Gamma3);
        let m = build_rect_mesh(2, 2, &spec).unwrap();
        let f = CoefficientFields::constant(2, 1.0, 1.0)
            .with_k1(|_, _| 2.0)
            .with_k2(|_, _| 3.0);
        let c = sample_coefficients(&m, &f).unwrap();
        for (k, facet) in m.facets.iter().enumerate() {
            let l = facet.label.unwrap();
            assert_eq!(c.k1[k], if l == Gamma4 { 2.0 } else { 0.0 });
            assert_eq!(c.k2[k], if l == Gamma4 || l == Gamma3 { 3.0 } else { 0.0 });
        }
    }

    #[test]
    fn tensor_helpers() {
        let t = Tensor::from_2x2(2.0, 1.0, 1.0, 2.0);
        assert_eq!(t.eigen_range(), (1.0, 3.0));
        let inv = t.inverse();
        let x = inv.apply(&t.apply(&[0.3, -0.7]));
        assert!((x[0] - 0.3).abs() < 1e-15 && (x[1] + 0.7).abs() < 1e-15);
    }
}
