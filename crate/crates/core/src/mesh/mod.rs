//! Hierarchical quadrilateral meshes with 1-irregular refinement.
//!
//! Cells are stored in a forest: coarse cells from the input file are the
//! roots, refined cells keep links to their four children. Only leaves are
//! active. Local vertex numbering is counter-clockwise,
//!
//! ```text
//!   v3 ---- f2 ---- v2
//!   |                |
//!   f3              f1
//!   |                |
//!   v0 ---- f0 ---- v1
//! ```
//!
//! which matches the reference square `[0,1]^2` with `v0 = (0,0)` and
//! `v2 = (1,1)`. Face `f` runs from local vertex `f` to local vertex `f+1`.

mod refine;
mod ucd;

use std::collections::{BTreeMap, HashMap};

pub use ucd::{read_ucd, read_ucd_file, write_ucd};

pub type CellId = usize;
pub type VertexId = usize;
pub type BoundaryId = u32;

/// Material id of a cell (0 fluid, 1 solid).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MaterialId(pub u8);

impl MaterialId {
    pub const FLUID: MaterialId = MaterialId(0);
    pub const SOLID: MaterialId = MaterialId(1);

    pub fn is_fluid(self) -> bool {
        self == Self::FLUID
    }

    pub fn is_solid(self) -> bool {
        self == Self::SOLID
    }
}

#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io error reading mesh: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid mesh: {0}")]
    Invalid(String),
}

/// Undirected edge key, stored with the smaller vertex first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge(pub VertexId, pub VertexId);

impl Edge {
    pub fn new(a: VertexId, b: VertexId) -> Self {
        if a < b {
            Edge(a, b)
        } else {
            Edge(b, a)
        }
    }
}

#[derive(Clone, Debug)]
pub struct Cell {
    pub vertices: [VertexId; 4],
    pub material: MaterialId,
    pub level: u32,
    pub parent: Option<CellId>,
    pub children: Option<[CellId; 4]>,
}

impl Cell {
    pub fn is_active(&self) -> bool {
        self.children.is_none()
    }

    /// Vertex pair of local face `f`, in counter-clockwise order.
    pub fn face_vertices(&self, face: usize) -> (VertexId, VertexId) {
        (self.vertices[face], self.vertices[(face + 1) % 4])
    }
}

/// A circle used to place new vertices on curved boundary parts.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircleManifold {
    pub center: [f64; 2],
    pub radius: f64,
}

impl CircleManifold {
    pub fn project(&self, p: [f64; 2]) -> [f64; 2] {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        let d = (dx * dx + dy * dy).sqrt();
        [
            self.center[0] + self.radius * dx / d,
            self.center[1] + self.radius * dy / d,
        ]
    }

    pub fn angle(&self, p: [f64; 2]) -> f64 {
        (p[1] - self.center[1]).atan2(p[0] - self.center[0])
    }

    /// Point at parameter `s` in `[0,1]` on the shorter arc from `a` to `b`.
    pub fn arc_point(&self, a: [f64; 2], b: [f64; 2], s: f64) -> [f64; 2] {
        let ta = self.angle(a);
        let mut dt = self.angle(b) - ta;
        if dt > std::f64::consts::PI {
            dt -= 2.0 * std::f64::consts::PI;
        } else if dt < -std::f64::consts::PI {
            dt += 2.0 * std::f64::consts::PI;
        }
        let t = ta + s * dt;
        [
            self.center[0] + self.radius * t.cos(),
            self.center[1] + self.radius * t.sin(),
        ]
    }

    /// Derivative of [`Self::arc_point`] with respect to `s`.
    pub fn arc_tangent(&self, a: [f64; 2], b: [f64; 2], s: f64) -> [f64; 2] {
        let ta = self.angle(a);
        let mut dt = self.angle(b) - ta;
        if dt > std::f64::consts::PI {
            dt -= 2.0 * std::f64::consts::PI;
        } else if dt < -std::f64::consts::PI {
            dt += 2.0 * std::f64::consts::PI;
        }
        let t = ta + s * dt;
        [-self.radius * t.sin() * dt, self.radius * t.cos() * dt]
    }
}

/// What lies across a face of an active cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceNeighbor {
    Boundary(BoundaryId),
    /// Same-size active neighbor.
    Conforming { cell: CellId, face: usize },
    /// The neighbor is refined once more; the two children touching the
    /// face are listed in the order of this cell's face orientation.
    Finer { cells: [(CellId, usize); 2] },
    /// This face is one half of a face of a coarser active neighbor.
    Coarser { cell: CellId, face: usize },
}

#[derive(Clone, Debug, Default)]
pub(crate) struct Topology {
    /// Active cells touching each edge, with their local face index.
    pub edge_cells: HashMap<Edge, Vec<(CellId, usize)>>,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub(crate) vertices: Vec<[f64; 2]>,
    pub(crate) cells: Vec<Cell>,
    pub(crate) active: Vec<CellId>,
    pub(crate) boundary: HashMap<Edge, BoundaryId>,
    pub(crate) midpoints: HashMap<Edge, VertexId>,
    pub(crate) edge_parent: HashMap<Edge, Edge>,
    pub(crate) manifolds: BTreeMap<BoundaryId, CircleManifold>,
    pub(crate) topology: Topology,
    generation: u64,
}

impl Mesh {
    /// Builds a level-0 mesh. Boundary faces are given as vertex pairs.
    pub fn from_parts(
        vertices: Vec<[f64; 2]>,
        cells: Vec<([VertexId; 4], MaterialId)>,
        boundary_faces: Vec<((VertexId, VertexId), BoundaryId)>,
    ) -> Result<Self, MeshError> {
        let nv = vertices.len();
        let mut cs = Vec::with_capacity(cells.len());
        for (k, (vs, mat)) in cells.into_iter().enumerate() {
            if vs.iter().any(|&v| v >= nv) {
                return Err(MeshError::Invalid(format!("cell {k} references a missing vertex")));
            }
            cs.push(Cell {
                vertices: vs,
                material: mat,
                level: 0,
                parent: None,
                children: None,
            });
        }
        let mut boundary = HashMap::new();
        for ((a, b), id) in boundary_faces {
            if a >= nv || b >= nv {
                return Err(MeshError::Invalid("boundary face references a missing vertex".into()));
            }
            if let Some(old) = boundary.insert(Edge::new(a, b), id) {
                if old != id {
                    return Err(MeshError::Invalid(format!(
                        "face ({a},{b}) carries two boundary ids {old} and {id}"
                    )));
                }
            }
        }
        let active = (0..cs.len()).collect();
        let mut mesh = Mesh {
            vertices,
            cells: cs,
            active,
            boundary,
            midpoints: HashMap::new(),
            edge_parent: HashMap::new(),
            manifolds: BTreeMap::new(),
            topology: Topology::default(),
            generation: 0,
        };
        mesh.rebuild_topology();
        Ok(mesh)
    }

    pub(crate) fn rebuild_topology(&mut self) {
        let mut edge_cells: HashMap<Edge, Vec<(CellId, usize)>> = HashMap::new();
        for &c in &self.active {
            let cell = &self.cells[c];
            for f in 0..4 {
                let (a, b) = cell.face_vertices(f);
                edge_cells.entry(Edge::new(a, b)).or_default().push((c, f));
            }
        }
        self.topology = Topology { edge_cells };
    }

    /// Attaches a circle to a boundary id and snaps its vertices onto it.
    pub fn attach_manifold(&mut self, id: BoundaryId, circle: CircleManifold) {
        self.manifolds.insert(id, circle);
        let verts: Vec<VertexId> = self
            .boundary
            .iter()
            .filter(|(_, &b)| b == id)
            .flat_map(|(e, _)| [e.0, e.1])
            .collect();
        for v in verts {
            self.vertices[v] = circle.project(self.vertices[v]);
        }
    }

    pub fn manifold(&self, id: BoundaryId) -> Option<&CircleManifold> {
        self.manifolds.get(&id)
    }

    pub fn manifolds(&self) -> impl Iterator<Item = (BoundaryId, &CircleManifold)> {
        self.manifolds.iter().map(|(&k, v)| (k, v))
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn vertex(&self, v: VertexId) -> [f64; 2] {
        self.vertices[v]
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn cell(&self, c: CellId) -> &Cell {
        &self.cells[c]
    }

    pub fn n_cells_total(&self) -> usize {
        self.cells.len()
    }

    /// Active (leaf) cells in increasing id order.
    pub fn active_cells(&self) -> &[CellId] {
        &self.active
    }

    pub fn n_active_cells(&self) -> usize {
        self.active.len()
    }

    /// Counter incremented by every refinement; identifies mesh generations.
    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn max_level(&self) -> u32 {
        self.active.iter().map(|&c| self.cells[c].level).max().unwrap_or(0)
    }

    pub fn boundary_id(&self, a: VertexId, b: VertexId) -> Option<BoundaryId> {
        self.boundary.get(&Edge::new(a, b)).copied()
    }

    pub fn edge_midpoint(&self, a: VertexId, b: VertexId) -> Option<VertexId> {
        self.midpoints.get(&Edge::new(a, b)).copied()
    }

    /// Active boundary faces as `(cell, face, id)`.
    pub fn boundary_faces(&self) -> Vec<(CellId, usize, BoundaryId)> {
        let mut out = Vec::new();
        for &c in &self.active {
            for f in 0..4 {
                if let FaceNeighbor::Boundary(id) = self.neighbor(c, f) {
                    out.push((c, f, id));
                }
            }
        }
        out
    }

    /// Circle attached to face `f` of cell `c`, if that face is a curved boundary face.
    pub fn curved_face(&self, c: CellId, f: usize) -> Option<&CircleManifold> {
        let (a, b) = self.cells[c].face_vertices(f);
        self.boundary_id(a, b).and_then(|id| self.manifolds.get(&id))
    }

    pub fn neighbor(&self, c: CellId, f: usize) -> FaceNeighbor {
        let cell = &self.cells[c];
        let (a, b) = cell.face_vertices(f);
        let key = Edge::new(a, b);
        if let Some(list) = self.topology.edge_cells.get(&key) {
            if let Some(&(n, nf)) = list.iter().find(|&&(n, _)| n != c) {
                return FaceNeighbor::Conforming { cell: n, face: nf };
            }
        }
        if let Some(&id) = self.boundary.get(&key) {
            return FaceNeighbor::Boundary(id);
        }
        if let Some(&m) = self.midpoints.get(&key) {
            let first = self.topology.edge_cells.get(&Edge::new(a, m));
            let second = self.topology.edge_cells.get(&Edge::new(m, b));
            if let (Some(first), Some(second)) = (first, second) {
                let pick = |list: &Vec<(CellId, usize)>| list.iter().copied().find(|&(n, _)| n != c);
                if let (Some(x), Some(y)) = (pick(first), pick(second)) {
                    return FaceNeighbor::Finer { cells: [x, y] };
                }
            }
        }
        if let Some(parent) = self.edge_parent.get(&key) {
            if let Some(list) = self.topology.edge_cells.get(parent) {
                if let Some(&(n, nf)) = list.first() {
                    return FaceNeighbor::Coarser { cell: n, face: nf };
                }
            }
        }
        panic!("face {f} of active cell {c} has no neighbor and no boundary id");
    }

    /// Faces separating fluid from solid, each reported once from the fluid side.
    pub fn interface_faces(&self) -> Vec<(CellId, usize)> {
        let mut out = Vec::new();
        for &c in &self.active {
            if !self.cells[c].material.is_fluid() {
                continue;
            }
            for f in 0..4 {
                let other = match self.neighbor(c, f) {
                    FaceNeighbor::Boundary(_) => continue,
                    FaceNeighbor::Conforming { cell, .. } => cell,
                    FaceNeighbor::Finer { cells } => cells[0].0,
                    FaceNeighbor::Coarser { cell, .. } => cell,
                };
                if self.cells[other].material.is_solid() {
                    out.push((c, f));
                }
            }
        }
        out
    }

    pub fn cell_corners(&self, c: CellId) -> [[f64; 2]; 4] {
        let v = self.cells[c].vertices;
        [
            self.vertices[v[0]],
            self.vertices[v[1]],
            self.vertices[v[2]],
            self.vertices[v[3]],
        ]
    }

    /// Area of the bilinear cell (shoelace formula).
    pub fn cell_area(&self, c: CellId) -> f64 {
        let p = self.cell_corners(c);
        let mut a = 0.0;
        for i in 0..4 {
            let q = p[(i + 1) % 4];
            a += p[i][0] * q[1] - q[0] * p[i][1];
        }
        0.5 * a
    }

    pub fn total_area(&self) -> f64 {
        self.active.iter().map(|&c| self.cell_area(c)).sum()
    }

    /// Minimum determinant of the bilinear map over a 3x3 Gauss rule and the corners.
    pub fn min_bilinear_jacobian(&self, c: CellId) -> f64 {
        let p = self.cell_corners(c);
        let g = 0.5 * (1.0 - (3.0f64 / 5.0).sqrt());
        let samples = [0.0, g, 0.5, 1.0 - g, 1.0];
        let mut min = f64::INFINITY;
        for &xi in &samples {
            for &eta in &samples {
                min = min.min(bilinear_det(&p, xi, eta));
            }
        }
        min
    }

    /// Checks the structural invariants; used by the reader and in tests.
    pub fn validate(&self) -> Result<(), MeshError> {
        for &c in &self.active {
            let cell = &self.cells[c];
            if cell.material.0 > 1 {
                return Err(MeshError::Invalid(format!(
                    "cell {c} has material id {} (expected 0 or 1)",
                    cell.material.0
                )));
            }
            if self.min_bilinear_jacobian(c) <= 0.0 {
                return Err(MeshError::Invalid(format!("cell {c} is inverted or degenerate")));
            }
            for f in 0..4 {
                let (a, b) = cell.face_vertices(f);
                let key = Edge::new(a, b);
                let shared = self
                    .topology
                    .edge_cells
                    .get(&key)
                    .map(|l| l.len())
                    .unwrap_or(0);
                if shared > 2 {
                    return Err(MeshError::Invalid(format!("edge {a}-{b} shared by {shared} cells")));
                }
                if shared == 2 && self.boundary.contains_key(&key) {
                    return Err(MeshError::Invalid(format!(
                        "interior face {a}-{b} carries a boundary id"
                    )));
                }
                let found = shared == 2
                    || self.boundary.contains_key(&key)
                    || self.midpoints.contains_key(&key)
                    || self.edge_parent.contains_key(&key);
                if !found {
                    return Err(MeshError::Invalid(format!(
                        "face {a}-{b} of cell {c} is neither interior nor on the boundary"
                    )));
                }
            }
        }
        Ok(())
    }

    /// True when no active face carries more than one hanging vertex.
    pub fn is_one_irregular(&self) -> bool {
        for &c in &self.active {
            let level = self.cells[c].level;
            for f in 0..4 {
                match self.neighbor(c, f) {
                    FaceNeighbor::Finer { cells } => {
                        for (n, _) in cells {
                            if self.cells[n].level != level + 1 {
                                return false;
                            }
                        }
                    }
                    FaceNeighbor::Coarser { cell, .. } if self.cells[cell].level + 1 != level => {
                        return false;
                    }
                    _ => {}
                }
            }
        }
        true
    }

    pub(crate) fn bump_generation(&mut self) {
        self.generation += 1;
    }
}

pub(crate) fn bilinear_det(p: &[[f64; 2]; 4], xi: f64, eta: f64) -> f64 {
    let dx_dxi = [
        (1.0 - eta) * (p[1][0] - p[0][0]) + eta * (p[2][0] - p[3][0]),
        (1.0 - eta) * (p[1][1] - p[0][1]) + eta * (p[2][1] - p[3][1]),
    ];
    let dx_deta = [
        (1.0 - xi) * (p[3][0] - p[0][0]) + xi * (p[2][0] - p[1][0]),
        (1.0 - xi) * (p[3][1] - p[0][1]) + xi * (p[2][1] - p[1][1]),
    ];
    dx_dxi[0] * dx_deta[1] - dx_dxi[1] * dx_deta[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn unit_square() -> Mesh {
        Mesh::from_parts(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![([0, 1, 2, 3], MaterialId::FLUID)],
            vec![((0, 1), 2), ((1, 2), 1), ((2, 3), 2), ((3, 0), 0)],
        )
        .unwrap()
    }

    fn two_cells(right: MaterialId) -> Mesh {
        Mesh::from_parts(
            vec![
                [0.0, 0.0],
                [1.0, 0.0],
                [2.0, 0.0],
                [0.0, 1.0],
                [1.0, 1.0],
                [2.0, 1.0],
            ],
            vec![([0, 1, 4, 3], MaterialId::FLUID), ([1, 2, 5, 4], right)],
            vec![
                ((0, 1), 2),
                ((1, 2), 2),
                ((2, 5), 1),
                ((5, 4), 2),
                ((4, 3), 2),
                ((3, 0), 0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn single_cell_mesh() {
        let m = unit_square();
        assert_eq!(m.n_active_cells(), 1);
        assert_eq!(m.boundary_faces().len(), 4);
        assert!((m.total_area() - 1.0).abs() < 1e-15);
        m.validate().unwrap();
    }

    #[test]
    fn interface_of_all_fluid_mesh_is_empty() {
        assert!(two_cells(MaterialId::FLUID).interface_faces().is_empty());
    }

    #[test]
    fn interface_reported_from_fluid_side() {
        let m = two_cells(MaterialId::SOLID);
        assert_eq!(m.interface_faces(), vec![(0, 1)]);
    }

    #[test]
    fn circle_arc_points() {
        let c = CircleManifold {
            center: [0.0, 0.0],
            radius: 2.0,
        };
        let p = c.arc_point([2.0, 0.0], [0.0, 2.0], 0.5);
        let s = 2.0f64.sqrt();
        assert!((p[0] - s).abs() < 1e-14 && (p[1] - s).abs() < 1e-14);
        // across the branch cut of atan2
        let q = c.arc_point([-2.0, 1e-3], [-2.0, -1e-3], 0.5);
        assert!((q[0] + 2.0).abs() < 1e-6);
    }
}
