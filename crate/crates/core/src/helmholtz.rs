//! Weighted Helmholtz decomposition of cellwise-constant vector fields,
//!
//! ```text
//! f = T∇g + k,   g ∈ P1 with zero trace,   ⟨k, ∇φ⟩ = 0 for all such φ.
//! ```
//!
//! The two parts are orthogonal in the `T⁻¹`-weighted inner product.

use crate::assembly::{cell_gradients, stiffness_matrix};
use crate::coefficients::Tensor;
use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::mesh::Mesh;

/// Cellwise vector field; only the first `mesh.dim` components are used.
pub type CellField = Vec<[f64; 2]>;

#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub field: CellField,
    /// Nodal potential `g`, zero on every boundary node.
    pub potential: Vec<f64>,
    /// `T∇g` per cell.
    pub gradient_part: CellField,
    /// `k = f − T∇g` per cell.
    pub divfree_part: CellField,
}

fn check_lengths(mesh: &Mesh, modulus: &[Tensor], f: &[[f64; 2]]) -> Result<()> {
    for (what, got) in [("modulus", modulus.len()), ("vector field", f.len())] {
        if got != mesh.n_cells() {
            return Err(Error::DimensionMismatch {
                what,
                expected: mesh.n_cells(),
                got,
            });
        }
    }
    Ok(())
}

fn gradient(mesh: &Mesh, cell: usize, nodal: &[f64]) -> [f64; 2] {
    let grads = cell_gradients(mesh, cell);
    let mut out = [0.0; 2];
    for (local, &node) in mesh.cells[cell].iter().enumerate() {
        out[0] += nodal[node] * grads[local][0];
        out[1] += nodal[node] * grads[local][1];
    }
    out
}

/// `⟨f, ∇φᵢ⟩` for every node `i`.
fn load(mesh: &Mesh, f: &[[f64; 2]]) -> Vec<f64> {
    let mut b = vec![0.0; mesh.n_nodes()];
    for cell in 0..mesh.n_cells() {
        let grads = cell_gradients(mesh, cell);
        let area = mesh.cell_measure(cell);
        for (local, &node) in mesh.cells[cell].iter().enumerate() {
            b[node] += area * (f[cell][0] * grads[local][0] + f[cell][1] * grads[local][1]);
        }
    }
    b
}

pub fn decompose(mesh: &Mesh, modulus: &[Tensor], f: &[[f64; 2]]) -> Result<Decomposition> {
    check_lengths(mesh, modulus, f)?;
    let interior = mesh.interior_nodes();
    let k = stiffness_matrix(mesh, modulus).select(&interior, &interior);
    let b_full = load(mesh, f);
    let b: Vec<f64> = interior.iter().map(|&i| b_full[i]).collect();
    let mut potential = vec![0.0; mesh.n_nodes()];
    if !interior.is_empty() {
        let g = Cholesky::factor(&k)?.solve(&b);
        for (&i, gi) in interior.iter().zip(g) {
            potential[i] = gi;
        }
    }
    let mut gradient_part = Vec::with_capacity(mesh.n_cells());
    let mut divfree_part = Vec::with_capacity(mesh.n_cells());
    for cell in 0..mesh.n_cells() {
        let tg = modulus[cell].apply(&gradient(mesh, cell, &potential));
        gradient_part.push(tg);
        divfree_part.push([f[cell][0] - tg[0], f[cell][1] - tg[1]]);
    }
    Ok(Decomposition {
        field: f.to_vec(),
        potential,
        gradient_part,
        divfree_part,
    })
}

/// The `T⁻¹`-orthogonal projection onto `T∇H̊¹`.
pub fn project_gradient(mesh: &Mesh, modulus: &[Tensor], f: &[[f64; 2]]) -> Result<CellField> {
    decompose(mesh, modulus, f).map(|d| d.gradient_part)
}

/// `max_i |⟨k, ∇φᵢ⟩|` over interior nodes.
pub fn orthogonality_residual(mesh: &Mesh, k: &[[f64; 2]]) -> f64 {
    let b = load(mesh, k);
    mesh.interior_nodes().into_iter().map(|i| b[i].abs()).fold(0.0, f64::max)
}

/// `⟨T⁻¹a, b⟩` over the domain.
pub fn weighted_inner(mesh: &Mesh, modulus: &[Tensor], a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    (0..mesh.n_cells())
        .map(|c| {
            let ta = modulus[c].inverse().apply(&a[c]);
            mesh.cell_measure(c) * (ta[0] * b[c][0] + ta[1] * b[c][1])
        })
        .sum()
}

/// `sqrt(Σ |cell|·|f|²)`.
pub fn l2_norm(mesh: &Mesh, f: &[[f64; 2]]) -> f64 {
    (0..mesh.n_cells())
        .map(|c| mesh.cell_measure(c) * (f[c][0] * f[c][0] + f[c][1] * f[c][1]))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_interval_mesh, build_rect_mesh, BoundaryLabel::*, PartitionSpec};
    use proptest::prelude::*;

    fn interval_field(n: usize, f: impl Fn(f64) -> f64) -> (Mesh, CellField) {
        let mesh = build_interval_mesh(n, Gamma0, Gamma0).unwrap();
        let field = (0..n).map(|c| [f(mesh.cell_midpoint(c)[0]), 0.0]).collect();
        (mesh, field)
    }

    #[test]
    fn linear_field_in_1d() {
        for t in [1.0, 2.0] {
            let (mesh, f) = interval_field(32, |x| x);
            let modulus = vec![Tensor::scalar(1, t); 32];
            let d = decompose(&mesh, &modulus, &f).unwrap();
            for c in 0..32 {
                let x = mesh.cell_midpoint(c)[0];
                assert!((d.divfree_part[c][0] - 0.5).abs() < 1e-12);
                assert!((d.gradient_part[c][0] - (x - 0.5)).abs() < 1e-12);
            }
            // potential is the interpolant of (x² − x)/(2T)
            for (i, p) in mesh.nodes.iter().enumerate() {
                let exact = (p[0] * p[0] - p[0]) / (2.0 * t);
                assert!((d.potential[i] - exact).abs() < 1e-12, "{} vs {exact}", d.potential[i]);
            }
        }
    }

    #[test]
    fn constants_are_divergence_free_in_1d() {
        let (mesh, f) = interval_field(10, |_| 3.0);
        let modulus = vec![Tensor::scalar(1, 1.0); 10];
        let p = project_gradient(&mesh, &modulus, &f).unwrap();
        assert!(p.iter().all(|v| v[0].abs() < 1e-12));
    }

    #[test]
    fn gradients_are_reproduced() {
        let spec = PartitionSpec::uniform(Gamma0);
        let mesh = build_rect_mesh(6, 5, &spec).unwrap();
        let modulus: Vec<Tensor> = (0..mesh.n_cells())
            .map(|c| {
                let m = mesh.cell_midpoint(c);
                Tensor::from_2x2(2.0 + m[0], 0.3, 0.3, 1.0 + m[1])
            })
            .collect();
        let g0: Vec<f64> = mesh
            .nodes
            .iter()
            .map(|p| p[0] * (1.0 - p[0]) * p[1] * (1.0 - p[1]))
            .collect();
        let f: CellField = (0..mesh.n_cells()).map(|c| modulus[c].apply(&gradient(&mesh, c, &g0))).collect();
        let d = decompose(&mesh, &modulus, &f).unwrap();
        assert!(l2_norm(&mesh, &d.divfree_part) <= 1e-11 * l2_norm(&mesh, &f));
    }

    #[test]
    fn length_mismatch() {
        let (mesh, f) = interval_field(4, |x| x);
        assert!(matches!(
            decompose(&mesh, &[Tensor::scalar(1, 1.0)], &f),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    fn random_model() -> impl Strategy<Value = (usize, usize, Vec<(f64, f64, f64)>, Vec<(f64, f64)>)> {
        (1usize..5, 1usize..5).prop_flat_map(|(nx, ny)| {
            let cells = 2 * nx * ny;
            (
                Just(nx),
                Just(ny),
                proptest::collection::vec((0.5f64..3.0, -0.4f64..0.4, 0.5f64..3.0), cells),
                proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), cells),
            )
        })
    }

    proptest! {
        #[test]
        fn orthogonal_split((nx, ny, t, f) in random_model()) {
            let mesh = build_rect_mesh(nx, ny, &PartitionSpec::uniform(Gamma0)).unwrap();
            let modulus: Vec<Tensor> = t.iter().map(|&(a, b, c)| Tensor::from_2x2(a, b, b, c)).collect();
            let f: CellField = f.iter().map(|&(a, b)| [a, b]).collect();
            let d = decompose(&mesh, &modulus, &f).unwrap();
            let scale = l2_norm(&mesh, &f).max(1e-300);
            prop_assert!(orthogonality_residual(&mesh, &d.divfree_part) <= 1e-11 * scale);
            let whole = weighted_inner(&mesh, &modulus, &f, &f);
            let parts = weighted_inner(&mesh, &modulus, &d.gradient_part, &d.gradient_part)
                + weighted_inner(&mesh, &modulus, &d.divfree_part, &d.divfree_part);
            prop_assert!((whole - parts).abs() <= 1e-10 * whole.max(1e-300));
            let again = decompose(&mesh, &modulus, &d.gradient_part).unwrap();
            for (a, b) in again.gradient_part.iter().zip(&d.gradient_part) {
                prop_assert!((a[0] - b[0]).abs() <= 1e-12 * scale.max(1.0) && (a[1] - b[1]).abs() <= 1e-12 * scale.max(1.0));
            }
            let div = decompose(&mesh, &modulus, &d.divfree_part).unwrap();
            prop_assert!(l2_norm(&mesh, &div.gradient_part) <= 1e-11 * scale);
        }

        #[test]
        fn projection_is_linear((nx, ny, t, f) in random_model(), alpha in -3.0f64..3.0) {
            let mesh = build_rect_mesh(nx, ny, &PartitionSpec::uniform(Gamma0)).unwrap();
            let modulus: Vec<Tensor> = t.iter().map(|&(a, b, c)| Tensor::from_2x2(a, b, b, c)).collect();
            let f1: CellField = f.iter().map(|&(a, b)| [a, b]).collect();
            let f2: CellField = f.iter().map(|&(a, b)| [b - a, a * b]).collect();
            let mix: CellField = f1.iter().zip(&f2).map(|(p, q)| [alpha * p[0] + q[0], alpha * p[1] + q[1]]).collect();
            let (p1, p2, pm) = (
                project_gradient(&mesh, &modulus, &f1).unwrap(),
                project_gradient(&mesh, &modulus, &f2).unwrap(),
                project_gradient(&mesh, &modulus, &mix).unwrap(),
            );
            for c in 0..mesh.n_cells() {
                for i in 0..2 {
                    let expected = alpha * p1[c][i] + p2[c][i];
                    prop_assert!((pm[c][i] - expected).abs() <= 1e-12 * (1.0 + expected.abs()) * 10.0);
                }
            }
        }
    }
}
