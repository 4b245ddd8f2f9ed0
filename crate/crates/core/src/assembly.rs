//! Discrete operators of the Lagrange-form wave equation.
//!
//! The discrete state is `(u, v)` with `u` the displacement and `v = x₂/ρ`
//! the velocity, both P1 nodal vectors on the non-Dirichlet nodes. An element
//! of the discrete maximal domain additionally carries `g`, one entry per
//! trace node, standing for the weak normal trace of `T∇u` tested against the
//! nodal basis. With this representation
//!
//! ```text
//! A(u, v, g) = (v, M⁻¹(−K u + Γᵀ g))
//! B₁(u, v, g) = (Bk1 u)|Γ̃ + g
//! B₂(u, v, g) = v|Γ̃
//! ```
//!
//! and `⟨Ax, y⟩_E + ⟨x, Ay⟩_E = B₁x·B₂y + B₂x·B₁y` holds exactly, where
//! `E = blockdiag(K + Bk1, M)` is the Gram matrix of the energy inner product.
//! The damped boundary condition `B₁x + k₂B₂x = 0` eliminates `g` and leaves
//! the pencil `E ẋ = C x` with `C = [[0, S], [−S, −Bk2]]`, `S = K + Bk1`.

use crate::coefficients::{validate_model, CoefficientSet, ModelError, ModelFlags, Tensor};
use crate::error::{Error, Result};
use crate::linalg::{dot, Cholesky, DenseMatrix};
use crate::mesh::Mesh;

/// Consistent P1 mass matrix `∫ w φᵢ φⱼ` for a cellwise-constant weight.
pub fn mass_matrix(mesh: &Mesh, weight: &[f64]) -> DenseMatrix {
    assert_eq!(weight.len(), mesh.n_cells(), "one weight per cell");
    let n = mesh.n_nodes();
    let mut m = DenseMatrix::zeros(n, n);
    for (cell, nodes) in mesh.cells.iter().enumerate() {
        let w = weight[cell] * mesh.cell_measure(cell);
        // 1D: (h/6)[[2,1],[1,2]]; 2D: (A/12)(1 + δᵢⱼ)
        let (diag, off) = match mesh.dim {
            1 => (w / 3.0, w / 6.0),
            _ => (w / 6.0, w / 12.0),
        };
        for (a, &i) in nodes.iter().enumerate() {
            for (b, &j) in nodes.iter().enumerate() {
                m[(i, j)] += if a == b { diag } else { off };
            }
        }
    }
    m
}

/// P1 stiffness matrix `∫ (T∇φᵢ)·∇φⱼ` for a cellwise-constant modulus.
pub fn stiffness_matrix(mesh: &Mesh, modulus: &[Tensor]) -> DenseMatrix {
    assert_eq!(modulus.len(), mesh.n_cells(), "one modulus per cell");
    let n = mesh.n_nodes();
    let mut k = DenseMatrix::zeros(n, n);
    for (cell, nodes) in mesh.cells.iter().enumerate() {
        let local = element_stiffness(mesh, cell, &modulus[cell]);
        let m = nodes.len();
        for a in 0..m {
            for b in 0..m {
                k[(nodes[a], nodes[b])] += local[a.min(b)][a.max(b)];
            }
        }
    }
    k
}

/// Upper triangle of the element stiffness matrix.
fn element_stiffness(mesh: &Mesh, cell: usize, t: &Tensor) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    let grads = cell_gradients(mesh, cell);
    let measure = mesh.cell_measure(cell);
    let m = mesh.dim + 1;
    for a in 0..m {
        let tg = t.apply(&grads[a]);
        for b in a..m {
            out[a][b] = measure * (tg[0] * grads[b][0] + tg[1] * grads[b][1]);
        }
    }
    out
}

/// Constant gradients of the local P1 basis functions.
pub fn cell_gradients(mesh: &Mesh, cell: usize) -> [[f64; 2]; 3] {
    let c = &mesh.cells[cell];
    match mesh.dim {
        1 => {
            let h = mesh.nodes[c[1]][0] - mesh.nodes[c[0]][0];
            [[-1.0 / h, 0.0], [1.0 / h, 0.0], [0.0, 0.0]]
        }
        _ => {
            let (p0, p1, p2) = (mesh.nodes[c[0]], mesh.nodes[c[1]], mesh.nodes[c[2]]);
            let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
            [
                [(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det],
                [(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det],
                [(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det],
            ]
        }
    }
}

/// Boundary mass `∫_Γ̃ k φᵢ φⱼ` for a facetwise-constant `k ≥ 0`.
///
/// Point masses at endpoints in 1D, edge mass matrices in 2D. Rows of
/// interior nodes are zero. A Dirichlet corner node may receive entries from
/// an adjacent non-`G0` edge; such rows are removed when the pencil is
/// reduced to the free nodes.
pub fn boundary_mass(mesh: &Mesh, k: &[f64]) -> Result<DenseMatrix> {
    assert_eq!(k.len(), mesh.facets.len(), "one coefficient per facet");
    let n = mesh.n_nodes();
    let mut b = DenseMatrix::zeros(n, n);
    for (facet, f) in mesh.facets.iter().enumerate() {
        let kf = k[facet];
        if !(kf >= 0.0) {
            return Err(Error::NegativeBoundaryCoefficient { facet, value: kf });
        }
        if kf == 0.0 || f.label.is_some_and(|l| l.is_dirichlet()) {
            continue;
        }
        match mesh.dim {
            1 => b[(f.nodes[0], f.nodes[0])] += kf,
            _ => {
                let w = kf * mesh.facet_measure(facet);
                let (i, j) = (f.nodes[0], f.nodes[1]);
                b[(i, i)] += w / 3.0;
                b[(j, j)] += w / 3.0;
                b[(i, j)] += w / 6.0;
                b[(j, i)] += w / 6.0;
            }
        }
    }
    Ok(b)
}

/// Index bookkeeping between mesh nodes, free (non-Dirichlet) unknowns and
/// trace entries.
#[derive(Clone, Debug, PartialEq)]
pub struct DofMap {
    /// Mesh node of each free unknown, ascending.
    pub free_nodes: Vec<usize>,
    /// Free index of each mesh node, `None` on Dirichlet nodes.
    pub node_to_free: Vec<Option<usize>>,
    /// Free index of each trace node (boundary, non-Dirichlet), ascending.
    pub trace: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> Self {
        let dirichlet = mesh.dirichlet_nodes();
        let mut node_to_free = vec![None; mesh.n_nodes()];
        let mut free_nodes = Vec::new();
        let mut d = dirichlet.iter().peekable();
        for node in 0..mesh.n_nodes() {
            if d.peek() == Some(&&node) {
                d.next();
                continue;
            }
            node_to_free[node] = Some(free_nodes.len());
            free_nodes.push(node);
        }
        let trace = mesh
            .trace_nodes()
            .into_iter()
            .map(|node| node_to_free[node].expect("trace nodes are free"))
            .collect();
        Self {
            free_nodes,
            node_to_free,
            trace,
        }
    }

    pub fn n_free(&self) -> usize {
        self.free_nodes.len()
    }

    pub fn n_trace(&self) -> usize {
        self.trace.len()
    }

    /// Restricts a full nodal matrix to the free unknowns.
    pub fn reduce(&self, full: &DenseMatrix) -> DenseMatrix {
        full.select(&self.free_nodes, &self.free_nodes)
    }

    /// Restricts a full nodal vector to the free unknowns.
    pub fn reduce_vec(&self, full: &[f64]) -> Vec<f64> {
        self.free_nodes.iter().map(|&k| full[k]).collect()
    }

    /// Extends a free vector by zero on Dirichlet nodes.
    pub fn expand_vec(&self, free: &[f64]) -> Vec<f64> {
        self.node_to_free
            .iter()
            .map(|f| f.map_or(0.0, |i| free[i]))
            .collect()
    }

    /// Values at the trace nodes.
    pub fn trace_of(&self, free: &[f64]) -> Vec<f64> {
        self.trace.iter().map(|&i| free[i]).collect()
    }

    /// `Γᵀ g`: scatters a trace vector into free indexing.
    pub fn lift_trace(&self, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_free()];
        for (&i, &gi) in self.trace.iter().zip(g) {
            out[i] += gi;
        }
        out
    }
}

/// Displacement/velocity pair in free indexing.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl State {
    pub fn zeros(n: usize) -> Self {
        Self {
            u: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    /// Concatenation `[u; v]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.u.len());
        out.extend_from_slice(&self.u);
        out.extend_from_slice(&self.v);
        out
    }

    pub fn from_vec(x: &[f64]) -> Self {
        assert!(x.len() % 2 == 0, "state vector has even length");
        let (u, v) = x.split_at(x.len() / 2);
        Self {
            u: u.to_vec(),
            v: v.to_vec(),
        }
    }
}

/// Element of the discrete maximal domain: state plus weak normal trace `g`.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainElement {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub g: Vec<f64>,
}

impl DomainElement {
    pub fn zeros(dofs: &DofMap) -> Self {
        Self {
            u: vec![0.0; dofs.n_free()],
            v: vec![0.0; dofs.n_free()],
            g: vec![0.0; dofs.n_trace()],
        }
    }

    pub fn state(&self) -> State {
        State {
            u: self.u.clone(),
            v: self.v.clone(),
        }
    }

    fn check(&self, dofs: &DofMap) {
        assert_eq!(self.u.len(), dofs.n_free(), "u has one entry per free node");
        assert_eq!(self.v.len(), dofs.n_free(), "v has one entry per free node");
        assert_eq!(self.g.len(), dofs.n_trace(), "g has one entry per trace node");
    }
}

/// Assembled operator pencil on the free unknowns.
#[derive(Clone, Debug)]
pub struct OperatorPencil {
    pub dim: usize,
    pub h: f64,
    pub flags: ModelFlags,
    pub dofs: DofMap,
    /// `M`, ρ-weighted mass.
    pub mass: DenseMatrix,
    /// `K`, T-weighted stiffness.
    pub stiffness: DenseMatrix,
    /// `Bk1`, k₁-weighted boundary mass.
    pub robin: DenseMatrix,
    /// `Bk2`, k₂-weighted boundary mass.
    pub damping: DenseMatrix,
    /// `S = K + Bk1`.
    pub potential: DenseMatrix,
    /// `E = blockdiag(S, M)`.
    pub gram: DenseMatrix,
    /// `C = [[0, S], [−S, −Bk2]]`, plus the lower-order perturbation if applied.
    pub dynamics: DenseMatrix,
    /// Whether `a`/`b` terms have been added to `dynamics`.
    pub perturbed: bool,
    mass_factor: Cholesky,
    gram_factor: Cholesky,
}

/// Builds the pencil `(E, C)` for the damped boundary condition.
pub fn assemble_constrained_pencil(mesh: &Mesh, coeffs: &CoefficientSet) -> Result<OperatorPencil> {
    let flags = validate_model(mesh, coeffs)?;
    let dofs = DofMap::new(mesh);
    let mass = dofs.reduce(&mass_matrix(mesh, &coeffs.rho));
    let stiffness = dofs.reduce(&stiffness_matrix(mesh, &coeffs.modulus));
    let robin = dofs.reduce(&boundary_mass(mesh, &coeffs.k1)?);
    let damping = dofs.reduce(&boundary_mass(mesh, &coeffs.k2)?);
    let potential = stiffness.add(&robin);
    let n = dofs.n_free();
    let zero = DenseMatrix::zeros(n, n);
    let gram = DenseMatrix::block2x2(&potential, &zero, &zero, &mass);
    let dynamics = DenseMatrix::block2x2(&zero, &potential, &potential.scaled(-1.0), &damping.scaled(-1.0));
    let gram_factor = energy_factor(&gram)?;
    let mass_factor = Cholesky::factor(&mass)?;
    Ok(OperatorPencil {
        dim: mesh.dim,
        h: mesh.h(),
        flags,
        dofs,
        mass,
        stiffness,
        robin,
        damping,
        potential,
        gram,
        dynamics,
        perturbed: false,
        mass_factor,
        gram_factor,
    })
}

/// `E = blockdiag(K + Bk1, M)` on the free unknowns.
pub fn energy_gram(mesh: &Mesh, coeffs: &CoefficientSet) -> Result<DenseMatrix> {
    let dofs = DofMap::new(mesh);
    let mass = dofs.reduce(&mass_matrix(mesh, &coeffs.rho));
    let potential = dofs
        .reduce(&stiffness_matrix(mesh, &coeffs.modulus))
        .add(&dofs.reduce(&boundary_mass(mesh, &coeffs.k1)?));
    let zero = DenseMatrix::zeros(dofs.n_free(), dofs.n_free());
    let gram = DenseMatrix::block2x2(&potential, &zero, &zero, &mass);
    energy_factor(&gram)?;
    Ok(gram)
}

fn energy_factor(gram: &DenseMatrix) -> Result<Cholesky> {
    Cholesky::factor(gram).map_err(|_| Error::Model(ModelError::DegenerateEnergyNorm))
}

impl OperatorPencil {
    pub fn n_free(&self) -> usize {
        self.dofs.n_free()
    }

    /// Order of the pencil, `2 · n_free`.
    pub fn order(&self) -> usize {
        2 * self.n_free()
    }

    pub fn gram_factor(&self) -> &Cholesky {
        &self.gram_factor
    }

    pub fn mass_factor(&self) -> &Cholesky {
        &self.mass_factor
    }

    /// `⟨x, y⟩_E = u_xᵀ S u_y + v_xᵀ M v_y`.
    pub fn inner(&self, x: &State, y: &State) -> f64 {
        self.potential.bilinear(&x.u, &y.u) + self.mass.bilinear(&x.v, &y.v)
    }

    pub fn norm(&self, x: &State) -> f64 {
        self.inner(x, x).max(0.0).sqrt()
    }

    /// Physical energy `uᵀ K u + vᵀ M v`, without the k₁ boundary term.
    pub fn energy(&self, x: &State) -> f64 {
        self.stiffness.bilinear(&x.u, &x.u) + self.mass.bilinear(&x.v, &x.v)
    }

    /// `vᵀ Bk2 v`, the rate at which the boundary removes energy.
    pub fn boundary_dissipation(&self, v: &[f64]) -> f64 {
        self.damping.bilinear(v, v)
    }

    /// Weak normal trace enforcing `B₁x + k₂B₂x = 0`.
    pub fn closing_flux(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let r = self.robin.matvec(u);
        let d = self.damping.matvec(v);
        self.dofs.trace.iter().map(|&i| -(r[i] + d[i])).collect()
    }

    /// Lifts a state into the discrete domain of `A_Θ`.
    pub fn close_boundary(&self, x: &State) -> DomainElement {
        DomainElement {
            u: x.u.clone(),
            v: x.v.clone(),
            g: self.closing_flux(&x.u, &x.v),
        }
    }

    /// `A_Θ x = E⁻¹ C x`.
    pub fn apply_generator(&self, x: &State) -> State {
        State::from_vec(&self.gram_factor.solve(&self.dynamics.matvec(&x.to_vec())))
    }

    /// Adds the lower-order terms: `C ← C + [[0, 0], [−Ma, −Mb]]`, with
    /// `Ma`, `Mb` given in full node indexing.
    pub fn with_perturbation(&self, ma: &DenseMatrix, mb: &DenseMatrix) -> OperatorPencil {
        let (ma, mb) = (self.dofs.reduce(ma), self.dofs.reduce(mb));
        let n = self.n_free();
        let zero = DenseMatrix::zeros(n, n);
        let extra = DenseMatrix::block2x2(&zero, &zero, &ma.scaled(-1.0), &mb.scaled(-1.0));
        let mut out = self.clone();
        out.dynamics = self.dynamics.add(&extra);
        out.perturbed = ma.max_abs() != 0.0 || mb.max_abs() != 0.0 || self.perturbed;
        out
    }
}

/// The unconstrained operator `A(u, v, g) = (v, M⁻¹(−K u + Γᵀ g))`.
pub fn apply_a(x: &DomainElement, pencil: &OperatorPencil) -> State {
    x.check(&pencil.dofs);
    let ku = pencil.stiffness.matvec(&x.u);
    let lifted = pencil.dofs.lift_trace(&x.g);
    let rhs: Vec<f64> = lifted.iter().zip(&ku).map(|(g, k)| g - k).collect();
    State {
        u: x.v.clone(),
        v: pencil.mass_factor.solve(&rhs),
    }
}

/// `B₁x = (Bk1 u)|Γ̃ + g`, in functional indexing.
pub fn trace_b1(x: &DomainElement, pencil: &OperatorPencil) -> Vec<f64> {
    x.check(&pencil.dofs);
    let r = pencil.robin.matvec(&x.u);
    pencil
        .dofs
        .trace
        .iter()
        .zip(&x.g)
        .map(|(&i, g)| r[i] + g)
        .collect()
}

/// `B₂x = v|Γ̃`, in nodal-value indexing.
pub fn trace_b2(x: &DomainElement, pencil: &OperatorPencil) -> Vec<f64> {
    x.check(&pencil.dofs);
    pencil.dofs.trace_of(&x.v)
}

/// `|⟨Ax, y⟩_E + ⟨x, Ay⟩_E − (B₁x·B₂y + B₂x·B₁y)|`.
pub fn green_identity_residual(x: &DomainElement, y: &DomainElement, pencil: &OperatorPencil) -> f64 {
    let (ax, ay) = (apply_a(x, pencil), apply_a(y, pencil));
    let (sx, sy) = (x.state(), y.state());
    let lhs = pencil.inner(&ax, &sy) + pencil.inner(&sx, &ay);
    let rhs = dot(&trace_b1(x, pencil), &trace_b2(y, pencil)) + dot(&trace_b2(x, pencil), &trace_b1(y, pencil));
    (lhs - rhs).abs()
}

/// Scale against which [`green_identity_residual`] is measured:
/// `‖x‖_E‖Ay‖_E + ‖y‖_E‖Ax‖_E + 1`.
pub fn green_identity_scale(x: &DomainElement, y: &DomainElement, pencil: &OperatorPencil) -> f64 {
    let (ax, ay) = (apply_a(x, pencil), apply_a(y, pencil));
    pencil.norm(&x.state()) * pencil.norm(&ay) + pencil.norm(&y.state()) * pencil.norm(&ax) + 1.0
}

/// Domain element with prescribed boundary values `B₁x = g*`, `B₂x = h*`
/// and zero displacement.
pub fn surjectivity_witness(g_target: &[f64], h_target: &[f64], pencil: &OperatorPencil) -> DomainElement {
    let u = vec![0.0; pencil.n_free()];
    surjectivity_witness_with(g_target, h_target, &u, pencil)
}

/// As [`surjectivity_witness`] with a caller-chosen displacement `u`.
pub fn surjectivity_witness_with(
    g_target: &[f64],
    h_target: &[f64],
    u: &[f64],
    pencil: &OperatorPencil,
) -> DomainElement {
    let dofs = &pencil.dofs;
    assert_eq!(g_target.len(), dofs.n_trace());
    assert_eq!(h_target.len(), dofs.n_trace());
    assert_eq!(u.len(), dofs.n_free());
    let mut v = vec![0.0; dofs.n_free()];
    for (&i, &h) in dofs.trace.iter().zip(h_target) {
        v[i] = h;
    }
    let r = pencil.robin.matvec(u);
    let g = dofs.trace.iter().zip(g_target).map(|(&i, gt)| gt - r[i]).collect();
    DomainElement { u: u.to_vec(), v, g }
}
