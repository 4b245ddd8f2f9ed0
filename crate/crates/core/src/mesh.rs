//! Uniform P1 meshes of the unit interval and the unit square with a labeled
//! boundary partition.
//!
//! Boundary facets are points in 1D and edges in 2D. Each facet carries one of
//! five labels selecting the boundary condition:
//!
//! | label | condition                                  |
//! |-------|--------------------------------------------|
//! | `G0`  | `w = 0`                                    |
//! | `G1`  | `ν·T∇w = 0`                                |
//! | `G2`  | `k₁w + ν·T∇w = 0`                          |
//! | `G3`  | `ν·T∇w + k₂∂ₜw = 0`                        |
//! | `G4`  | `k₁w + ν·T∇w + k₂∂ₜw = 0`                  |
//!
//! A node touched by any `G0` facet (including square corners shared with a
//! differently labeled side) is a Dirichlet node. All other boundary nodes
//! form the trace set `Γ̃`.
//!
//! # Text format
//!
//! [`Mesh::to_text`] writes one record per line:
//!
//! ```text
//! dim <1|2>
//! node <x> [<y>]
//! cell <i> <j> [<k>]
//! facet <G0..G4|-> <i> [<j>]
//! ```
//!
//! Nodes and cells are numbered implicitly by their order of appearance.
//! `-` marks an unlabeled facet, which [`validate_mesh`] rejects.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub type Point = [f64; 2];

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryLabel {
    Gamma0,
    Gamma1,
    Gamma2,
    Gamma3,
    Gamma4,
}

impl BoundaryLabel {
    pub const ALL: [BoundaryLabel; 5] = [
        BoundaryLabel::Gamma0,
        BoundaryLabel::Gamma1,
        BoundaryLabel::Gamma2,
        BoundaryLabel::Gamma3,
        BoundaryLabel::Gamma4,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_dirichlet(self) -> bool {
        self == BoundaryLabel::Gamma0
    }

    /// Whether the Robin coefficient `k₁` acts on this part of the boundary.
    pub fn carries_k1(self) -> bool {
        matches!(self, BoundaryLabel::Gamma2 | BoundaryLabel::Gamma4)
    }

    /// Whether the damping coefficient `k₂` acts on this part of the boundary.
    pub fn carries_k2(self) -> bool {
        matches!(self, BoundaryLabel::Gamma3 | BoundaryLabel::Gamma4)
    }
}

impl fmt::Display for BoundaryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "G{}", self.index())
    }
}

impl FromStr for BoundaryLabel {
    type Err = MeshError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "G0" | "Γ0" | "Γ₀" => Ok(BoundaryLabel::Gamma0),
            "G1" | "Γ1" | "Γ₁" => Ok(BoundaryLabel::Gamma1),
            "G2" | "Γ2" | "Γ₂" => Ok(BoundaryLabel::Gamma2),
            "G3" | "Γ3" | "Γ₃" => Ok(BoundaryLabel::Gamma3),
            "G4" | "Γ4" | "Γ₄" => Ok(BoundaryLabel::Gamma4),
            other => Err(MeshError::UnknownLabel(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("cell count must be positive")]
    ZeroCells,
    #[error("mesh dimension must be 1 or 2, got {0}")]
    BadDimension(usize),
    #[error("unknown boundary label `{0}`")]
    UnknownLabel(String),
    #[error("{side} side: parameter range near {at} is not assigned a label")]
    UncoveredSide { side: Side, at: f64 },
    #[error("{side} side: label intervals overlap near {at}")]
    OverlappingLabels { side: Side, at: f64 },
    #[error("{side} side: label boundary {at} falls strictly inside a facet")]
    LabelInsideFacet { side: Side, at: f64 },
    #[error("{side} side: invalid interval [{start}, {end})")]
    InvalidInterval { side: Side, start: f64, end: f64 },
    #[error("boundary facet {facet} is unlabeled")]
    UnlabeledFacet { facet: usize },
    #[error("cell {cell} is degenerate")]
    DegenerateCell { cell: usize },
    #[error("{what} {index} references node {node} out of range ({n_nodes} nodes)")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        node: usize,
        n_nodes: usize,
    },
    #[error("{what} {index} has {got} nodes, expected {expected}")]
    WrongArity {
        what: &'static str,
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("topological boundary facet {nodes:?} has no labeled facet")]
    MissingBoundaryFacet { nodes: Vec<usize> },
    #[error("facet {facet} is not on the topological boundary or is duplicated")]
    StrayFacet { facet: usize },
    #[error("mesh text line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Side::Bottom => "bottom",
            Side::Right => "right",
            Side::Top => "top",
            Side::Left => "left",
        };
        f.write_str(s)
    }
}

/// One labeled parameter interval `[start, end)` along a side of the square.
///
/// The parameter is the `x` coordinate on the bottom and top sides and the
/// `y` coordinate on the left and right sides, always running from 0 to 1.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct SideAssignment {
    pub label: BoundaryLabel,
    pub start: f64,
    pub end: f64,
}

impl SideAssignment {
    pub fn whole(label: BoundaryLabel) -> Self {
        Self {
            label,
            start: 0.0,
            end: 1.0,
        }
    }
}

/// Label assignment for the four sides of the unit square.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PartitionSpec {
    pub bottom: Vec<SideAssignment>,
    pub right: Vec<SideAssignment>,
    pub top: Vec<SideAssignment>,
    pub left: Vec<SideAssignment>,
}

impl PartitionSpec {
    pub fn uniform(label: BoundaryLabel) -> Self {
        let whole = vec![SideAssignment::whole(label)];
        Self {
            bottom: whole.clone(),
            right: whole.clone(),
            top: whole.clone(),
            left: whole,
        }
    }

    pub fn side(&self, side: Side) -> &[SideAssignment] {
        match side {
            Side::Bottom => &self.bottom,
            Side::Right => &self.right,
            Side::Top => &self.top,
            Side::Left => &self.left,
        }
    }

    pub fn side_mut(&mut self, side: Side) -> &mut Vec<SideAssignment> {
        match side {
            Side::Bottom => &mut self.bottom,
            Side::Right => &mut self.right,
            Side::Top => &mut self.top,
            Side::Left => &mut self.left,
        }
    }

    pub fn with_side(mut self, side: Side, label: BoundaryLabel) -> Self {
        *self.side_mut(side) = vec![SideAssignment::whole(label)];
        self
    }

    /// Resolves one side into per-edge labels for `n` equal edges.
    fn resolve(&self, side: Side, n: usize) -> Result<Vec<BoundaryLabel>, MeshError> {
        const SNAP: f64 = 1e-9;
        let mut labels: Vec<Option<BoundaryLabel>> = vec![None; n];
        for a in self.side(side) {
            if !(a.start.is_finite() && a.end.is_finite())
                || a.start < -SNAP
                || a.end > 1.0 + SNAP
                || a.start > a.end
            {
                return Err(MeshError::InvalidInterval {
                    side,
                    start: a.start,
                    end: a.end,
                });
            }
            let snap = |t: f64| -> Result<usize, MeshError> {
                let k = (t * n as f64).round();
                if (t * n as f64 - k).abs() > SNAP * n as f64 {
                    return Err(MeshError::LabelInsideFacet { side, at: t });
                }
                Ok(k as usize)
            };
            let (i0, i1) = (snap(a.start)?, snap(a.end)?);
            for (e, slot) in labels.iter_mut().enumerate().take(i1).skip(i0) {
                if slot.is_some() {
                    return Err(MeshError::OverlappingLabels {
                        side,
                        at: e as f64 / n as f64,
                    });
                }
                *slot = Some(a.label);
            }
        }
        labels
            .into_iter()
            .enumerate()
            .map(|(e, l)| {
                l.ok_or(MeshError::UncoveredSide {
                    side,
                    at: (e as f64 + 0.5) / n as f64,
                })
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryFacet {
    pub nodes: Vec<usize>,
    pub label: Option<BoundaryLabel>,
}

/// Simplicial mesh: segments in 1D, triangles in 2D.
///
/// 1D nodes store `[x, 0.0]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub dim: usize,
    pub nodes: Vec<Point>,
    pub cells: Vec<Vec<usize>>,
    pub facets: Vec<BoundaryFacet>,
}

/// Uniform mesh of `(0, 1)` with `n_cells` segments.
pub fn build_interval_mesh(
    n_cells: usize,
    left: BoundaryLabel,
    right: BoundaryLabel,
) -> Result<Mesh, MeshError> {
    if n_cells == 0 {
        return Err(MeshError::ZeroCells);
    }
    let nodes = (0..=n_cells)
        .map(|k| [k as f64 / n_cells as f64, 0.0])
        .collect();
    let cells = (0..n_cells).map(|k| vec![k, k + 1]).collect();
    let facets = vec![
        BoundaryFacet {
            nodes: vec![0],
            label: Some(left),
        },
        BoundaryFacet {
            nodes: vec![n_cells],
            label: Some(right),
        },
    ];
    let mesh = Mesh {
        dim: 1,
        nodes,
        cells,
        facets,
    };
    validate_mesh(&mesh)?;
    Ok(mesh)
}

/// Uniform triangulation of `(0, 1)²`; every grid square is cut along the
/// diagonal from its lower-left to its upper-right corner.
pub fn build_rect_mesh(nx: usize, ny: usize, spec: &PartitionSpec) -> Result<Mesh, MeshError> {
    if nx == 0 || ny == 0 {
        return Err(MeshError::ZeroCells);
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([i as f64 / nx as f64, j as f64 / ny as f64]);
        }
    }
    let mut cells = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            cells.push(vec![a, b, c]);
            cells.push(vec![a, c, d]);
        }
    }

    let mut facets = Vec::with_capacity(2 * (nx + ny));
    for (side, n) in [(Side::Bottom, nx), (Side::Right, ny), (Side::Top, nx), (Side::Left, ny)] {
        let labels = spec.resolve(side, n)?;
        for (e, label) in labels.into_iter().enumerate() {
            let pair = match side {
                Side::Bottom => [id(e, 0), id(e + 1, 0)],
                Side::Right => [id(nx, e), id(nx, e + 1)],
                Side::Top => [id(e, ny), id(e + 1, ny)],
                Side::Left => [id(0, e), id(0, e + 1)],
            };
            facets.push(BoundaryFacet {
                nodes: pair.to_vec(),
                label: Some(label),
            });
        }
    }

    let mesh = Mesh {
        dim: 2,
        nodes,
        cells,
        facets,
    };
    validate_mesh(&mesh)?;
    Ok(mesh)
}

/// Checks every structural invariant of a mesh.
pub fn validate_mesh(mesh: &Mesh) -> Result<(), MeshError> {
    if mesh.dim != 1 && mesh.dim != 2 {
        return Err(MeshError::BadDimension(mesh.dim));
    }
    let n_nodes = mesh.nodes.len();
    let cell_arity = mesh.dim + 1;
    for (index, cell) in mesh.cells.iter().enumerate() {
        check_arity("cell", index, cell, cell_arity)?;
        check_range("cell", index, cell, n_nodes)?;
    }
    for (index, facet) in mesh.facets.iter().enumerate() {
        check_arity("facet", index, &facet.nodes, mesh.dim)?;
        check_range("facet", index, &facet.nodes, n_nodes)?;
    }
    for (cell, nodes) in mesh.cells.iter().enumerate() {
        let distinct: BTreeSet<_> = nodes.iter().collect();
        if distinct.len() != nodes.len() || !(mesh.cell_measure(cell) > 1e-14) {
            return Err(MeshError::DegenerateCell { cell });
        }
    }
    if let Some(facet) = mesh.facets.iter().position(|f| f.label.is_none()) {
        return Err(MeshError::UnlabeledFacet { facet });
    }

    let mut boundary = mesh.topological_boundary();
    for (index, facet) in mesh.facets.iter().enumerate() {
        if !boundary.remove(&sorted_key(&facet.nodes)) {
            return Err(MeshError::StrayFacet { facet: index });
        }
    }
    if let Some(nodes) = boundary.into_iter().next() {
        return Err(MeshError::MissingBoundaryFacet { nodes });
    }
    Ok(())
}

fn check_arity(what: &'static str, index: usize, nodes: &[usize], expected: usize) -> Result<(), MeshError> {
    if nodes.len() != expected {
        return Err(MeshError::WrongArity {
            what,
            index,
            got: nodes.len(),
            expected,
        });
    }
    Ok(())
}

fn check_range(what: &'static str, index: usize, nodes: &[usize], n_nodes: usize) -> Result<(), MeshError> {
    match nodes.iter().find(|&&k| k >= n_nodes) {
        Some(&node) => Err(MeshError::IndexOutOfRange {
            what,
            index,
            node,
            n_nodes,
        }),
        None => Ok(()),
    }
}

fn sorted_key(nodes: &[usize]) -> Vec<usize> {
    let mut k = nodes.to_vec();
    k.sort_unstable();
    k
}

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    /// Length (1D) or area (2D) of a cell.
    pub fn cell_measure(&self, cell: usize) -> f64 {
        let c = &self.cells[cell];
        match self.dim {
            1 => (self.nodes[c[1]][0] - self.nodes[c[0]][0]).abs(),
            _ => triangle_area(self.nodes[c[0]], self.nodes[c[1]], self.nodes[c[2]]).abs(),
        }
    }

    /// Point count (1D) or edge length (2D).
    pub fn facet_measure(&self, facet: usize) -> f64 {
        let f = &self.facets[facet].nodes;
        match self.dim {
            1 => 1.0,
            _ => distance(self.nodes[f[0]], self.nodes[f[1]]),
        }
    }

    pub fn cell_midpoint(&self, cell: usize) -> Point {
        centroid(self.cells[cell].iter().map(|&k| self.nodes[k]))
    }

    pub fn facet_midpoint(&self, facet: usize) -> Point {
        centroid(self.facets[facet].nodes.iter().map(|&k| self.nodes[k]))
    }

    /// Largest cell diameter.
    pub fn h(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| {
                let mut d: f64 = 0.0;
                for (a, &i) in c.iter().enumerate() {
                    for &j in &c[a + 1..] {
                        d = d.max(distance(self.nodes[i], self.nodes[j]));
                    }
                }
                d
            })
            .fold(0.0, f64::max)
    }

    /// Facets of the cell complex that belong to exactly one cell, as sorted node tuples.
    pub fn topological_boundary(&self) -> BTreeSet<Vec<usize>> {
        let mut count: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for cell in &self.cells {
            for skip in 0..cell.len() {
                let face: Vec<usize> = cell
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != skip)
                    .map(|(_, &v)| v)
                    .collect();
                *count.entry(sorted_key(&face)).or_default() += 1;
            }
        }
        count
            .into_iter()
            .filter(|(_, c)| *c == 1)
            .map(|(f, _)| f)
            .collect()
    }

    pub fn topological_boundary_measure(&self) -> f64 {
        self.topological_boundary()
            .iter()
            .map(|f| match self.dim {
                1 => 1.0,
                _ => distance(self.nodes[f[0]], self.nodes[f[1]]),
            })
            .sum()
    }

    /// Facet measure summed per label, indexed by [`BoundaryLabel::index`].
    pub fn measure_by_label(&self) -> [f64; 5] {
        let mut m = [0.0; 5];
        for (k, f) in self.facets.iter().enumerate() {
            if let Some(l) = f.label {
                m[l.index()] += self.facet_measure(k);
            }
        }
        m
    }

    /// Nodes on any `G0` facet, ascending.
    pub fn dirichlet_nodes(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self
            .facets
            .iter()
            .filter(|f| f.label.is_some_and(BoundaryLabel::is_dirichlet))
            .flat_map(|f| f.nodes.iter().copied())
            .collect();
        set.into_iter().collect()
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.facets.iter().flat_map(|f| f.nodes.iter().copied()).collect();
        set.into_iter().collect()
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        let boundary: BTreeSet<usize> = self.boundary_nodes().into_iter().collect();
        (0..self.n_nodes()).filter(|k| !boundary.contains(k)).collect()
    }

    /// Boundary nodes not constrained by `G0`, ascending.
    pub fn trace_nodes(&self) -> Vec<usize> {
        let dirichlet: BTreeSet<usize> = self.dirichlet_nodes().into_iter().collect();
        self.boundary_nodes()
            .into_iter()
            .filter(|k| !dirichlet.contains(k))
            .collect()
    }

    pub fn has_dirichlet(&self) -> bool {
        self.facets
            .iter()
            .any(|f| f.label.is_some_and(BoundaryLabel::is_dirichlet))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("dim {}\n", self.dim);
        for p in &self.nodes {
            if self.dim == 1 {
                out.push_str(&format!("node {:?}\n", p[0]));
            } else {
                out.push_str(&format!("node {:?} {:?}\n", p[0], p[1]));
            }
        }
        for c in &self.cells {
            out.push_str("cell");
            for k in c {
                out.push_str(&format!(" {k}"));
            }
            out.push('\n');
        }
        for f in &self.facets {
            match f.label {
                Some(l) => out.push_str(&format!("facet {l}")),
                None => out.push_str("facet -"),
            }
            for k in &f.nodes {
                out.push_str(&format!(" {k}"));
            }
            out.push('\n');
        }
        out
    }

    /// Parses [`Mesh::to_text`] output. The result is not validated.
    pub fn from_text(text: &str) -> Result<Mesh, MeshError> {
        let mut mesh = Mesh {
            dim: 0,
            nodes: Vec::new(),
            cells: Vec::new(),
            facets: Vec::new(),
        };
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let err = |message: &str| MeshError::Parse {
                line,
                message: message.to_string(),
            };
            let mut tok = raw.split_whitespace();
            let Some(kind) = tok.next() else { continue };
            let rest: Vec<&str> = tok.collect();
            let ints = |xs: &[&str]| -> Result<Vec<usize>, MeshError> {
                xs.iter()
                    .map(|s| s.parse::<usize>().map_err(|_| err("bad node index")))
                    .collect()
            };
            match kind {
                "dim" => {
                    mesh.dim = rest
                        .first()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| err("bad dimension"))?;
                }
                "node" => {
                    let coords: Result<Vec<f64>, _> = rest.iter().map(|s| s.parse::<f64>()).collect();
                    let coords = coords.map_err(|_| err("bad coordinate"))?;
                    match coords.as_slice() {
                        [x] => mesh.nodes.push([*x, 0.0]),
                        [x, y] => mesh.nodes.push([*x, *y]),
                        _ => return Err(err("node needs 1 or 2 coordinates")),
                    }
                }
                "cell" => mesh.cells.push(ints(&rest)?),
                "facet" => {
                    let (label, nodes) = rest.split_first().ok_or_else(|| err("facet needs a label"))?;
                    let label = match *label {
                        "-" => None,
                        s => Some(s.parse().map_err(|_| err("unknown label"))?),
                    };
                    mesh.facets.push(BoundaryFacet {
                        nodes: ints(nodes)?,
                        label,
                    });
                }
                _ => return Err(err("unknown record")),
            }
        }
        Ok(mesh)
    }
}

fn triangle_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn distance(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn centroid(points: impl Iterator<Item = Point>) -> Point {
    let mut s = [0.0, 0.0];
    let mut n = 0.0;
    for p in points {
        s[0] += p[0];
        s[1] += p[1];
        n += 1.0;
    }
    [s[0] / n, s[1] / n]
}

#[cfg(test)]
mod tests {
    use super::BoundaryLabel::*;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn smallest_interval() {
        let m = build_interval_mesh(1, Gamma0, Gamma0).unwrap();
        assert_eq!(m.nodes, vec![[0.0, 0.0], [1.0, 0.0]]);
        assert_eq!(m.cells, vec![vec![0, 1]]);
        assert!(m.facets.iter().all(|f| f.label == Some(Gamma0)));
        assert!(m.interior_nodes().is_empty());
    }

    #[test]
    fn four_cell_interval() {
        let m = build_interval_mesh(4, Gamma0, Gamma3).unwrap();
        let xs: Vec<f64> = m.nodes.iter().map(|p| p[0]).collect();
        assert_eq!(xs, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(m.facets[0], BoundaryFacet { nodes: vec![0], label: Some(Gamma0) });
        assert_eq!(m.facets[1], BoundaryFacet { nodes: vec![4], label: Some(Gamma3) });
        assert_eq!(m.trace_nodes(), vec![4]);
        assert_eq!(m.dirichlet_nodes(), vec![0]);
    }

    #[test]
    fn zero_cells_rejected() {
        assert_eq!(build_interval_mesh(0, Gamma0, Gamma1), Err(MeshError::ZeroCells));
        assert_eq!(
            build_rect_mesh(0, 3, &PartitionSpec::uniform(Gamma0)),
            Err(MeshError::ZeroCells)
        );
    }

    #[test]
    fn unit_square_single_cell() {
        let m = build_rect_mesh(1, 1, &PartitionSpec::uniform(Gamma0)).unwrap();
        assert_eq!(m.n_nodes(), 4);
        assert_eq!(m.n_cells(), 2);
        assert_eq!(m.facets.len(), 4);
        assert!(m.facets.iter().all(|f| f.label == Some(Gamma0)));
    }

    #[test]
    fn two_by_two_with_dirichlet_left() {
        let spec = PartitionSpec::uniform(Gamma3).with_side(Side::Left, Gamma0);
        let m = build_rect_mesh(2, 2, &spec).unwrap();
        assert_eq!(m.n_nodes(), 9);
        assert_eq!(m.n_cells(), 8);
        let count = |l| m.facets.iter().filter(|f| f.label == Some(l)).count();
        assert_eq!(count(Gamma0), 2);
        assert_eq!(count(Gamma3), 6);
        // corners (0,0) and (0,1) belong to the Dirichlet side
        assert_eq!(m.dirichlet_nodes(), vec![0, 3, 6]);
    }

    #[test]
    fn unassigned_top_side_is_rejected() {
        let mut spec = PartitionSpec::uniform(Gamma1);
        spec.top.clear();
        assert!(matches!(
            build_rect_mesh(2, 2, &spec),
            Err(MeshError::UncoveredSide { side: Side::Top, .. })
        ));
    }

    #[test]
    fn overlapping_intervals_rejected() {
        let mut spec = PartitionSpec::uniform(Gamma1);
        spec.bottom = vec![
            SideAssignment { label: Gamma0, start: 0.0, end: 0.75 },
            SideAssignment { label: Gamma3, start: 0.5, end: 1.0 },
        ];
        assert!(matches!(
            build_rect_mesh(4, 4, &spec),
            Err(MeshError::OverlappingLabels { side: Side::Bottom, .. })
        ));
    }

    #[test]
    fn label_boundary_must_snap_to_node() {
        let mut spec = PartitionSpec::uniform(Gamma1);
        spec.right = vec![
            SideAssignment { label: Gamma0, start: 0.0, end: 0.3 },
            SideAssignment { label: Gamma3, start: 0.3, end: 1.0 },
        ];
        assert!(matches!(
            build_rect_mesh(4, 4, &spec),
            Err(MeshError::LabelInsideFacet { side: Side::Right, .. })
        ));
        // 0.25 snaps at ny = 4
        spec.right[0].end = 0.25;
        spec.right[1].start = 0.25;
        let m = build_rect_mesh(4, 4, &spec).unwrap();
        let by = m.measure_by_label();
        assert!((by[0] - 0.25).abs() < 1e-15);
        assert!((by[3] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn validate_accepts_built_interval() {
        let m = build_interval_mesh(4, Gamma0, Gamma1).unwrap();
        assert_eq!(validate_mesh(&m), Ok(()));
    }

    #[test]
    fn validate_flags_unlabeled_facet() {
        let mut m = build_interval_mesh(4, Gamma0, Gamma1).unwrap();
        m.facets[1].label = None;
        assert_eq!(validate_mesh(&m), Err(MeshError::UnlabeledFacet { facet: 1 }));
    }

    #[test]
    fn validate_flags_degenerate_triangle() {
        let mut m = build_rect_mesh(2, 2, &PartitionSpec::uniform(Gamma0)).unwrap();
        m.cells[3] = vec![4, 4, 5];
        assert_eq!(validate_mesh(&m), Err(MeshError::DegenerateCell { cell: 3 }));
    }

    #[test]
    fn validate_flags_bad_index() {
        let mut m = build_interval_mesh(2, Gamma0, Gamma1).unwrap();
        m.cells[0][1] = 17;
        assert!(matches!(validate_mesh(&m), Err(MeshError::IndexOutOfRange { node: 17, .. })));
    }

    #[test]
    fn validate_flags_missing_boundary_facet() {
        let mut m = build_rect_mesh(2, 2, &PartitionSpec::uniform(Gamma0)).unwrap();
        m.facets.pop();
        assert!(matches!(validate_mesh(&m), Err(MeshError::MissingBoundaryFacet { .. })));
    }

    #[test]
    fn text_round_trip() {
        let spec = PartitionSpec::uniform(Gamma4).with_side(Side::Left, Gamma0);
        let m = build_rect_mesh(3, 2, &spec).unwrap();
        assert_eq!(Mesh::from_text(&m.to_text()).unwrap(), m);
        let mut unlabeled = build_interval_mesh(2, Gamma0, Gamma1).unwrap();
        unlabeled.facets[0].label = None;
        let parsed = Mesh::from_text(&unlabeled.to_text()).unwrap();
        assert_eq!(validate_mesh(&parsed), Err(MeshError::UnlabeledFacet { facet: 0 }));
    }

    fn label() -> impl Strategy<Value = BoundaryLabel> {
        (0usize..5).prop_map(|k| BoundaryLabel::ALL[k])
    }

    proptest! {
        #[test]
        fn rect_counts_and_measures(nx in 1usize..9, ny in 1usize..9,
                                    labels in proptest::collection::vec(label(), 4)) {
            let spec = PartitionSpec::default()
                .with_side(Side::Bottom, labels[0])
                .with_side(Side::Right, labels[1])
                .with_side(Side::Top, labels[2])
                .with_side(Side::Left, labels[3]);
            let m = build_rect_mesh(nx, ny, &spec).unwrap();
            prop_assert_eq!(m.n_cells(), 2 * nx * ny);
            prop_assert_eq!(m.facets.len(), 2 * (nx + ny));
            let total: f64 = m.measure_by_label().iter().sum();
            prop_assert!((total - 4.0).abs() < 1e-12);
            prop_assert!((m.topological_boundary_measure() - 4.0).abs() < 1e-12);
        }

        #[test]
        fn interval_measures(n in 1usize..64, l in label(), r in label()) {
            let m = build_interval_mesh(n, l, r).unwrap();
            let total: f64 = m.measure_by_label().iter().sum();
            prop_assert!((total - 2.0).abs() < 1e-12);
            prop_assert_eq!(m.topological_boundary().len(), 2);
        }

        #[test]
        fn split_side_measures(n in 1usize..8, cut in 0usize..8) {
            let n = 2 * n;
            let cut = cut.min(n);
            let t = cut as f64 / n as f64;
            let mut spec = PartitionSpec::uniform(Gamma1);
            spec.bottom = vec![
                SideAssignment { label: Gamma0, start: 0.0, end: t },
                SideAssignment { label: Gamma3, start: t, end: 1.0 },
            ];
            let m = build_rect_mesh(n, n, &spec).unwrap();
            let by = m.measure_by_label();
            prop_assert!((by[0] - t).abs() < 1e-12);
            prop_assert!((by[3] - (1.0 - t)).abs() < 1e-12);
            prop_assert!((by.iter().sum::<f64>() - 4.0).abs() < 1e-12);
        }
    }
}
