//! Global numbering of continuous Lagrange spaces and of the mixed
//! velocity/displacement/pressure space.

use std::collections::HashMap;

use crate::mesh::{CellId, Edge, Mesh, VertexId};

use super::element::{NodeLocation, ScalarElement};
use super::geometry::MeshGeometry;

/// Continuous scalar `Q_k` space on the active cells of a mesh.
///
/// Numbering walks the active cells in order and each cell's nodes
/// lexicographically, assigning a new index the first time a node is seen,
/// so it only depends on the mesh.
#[derive(Clone, Debug)]
pub struct ScalarDofs {
    element: ScalarElement,
    n_dofs: usize,
    slot: Vec<usize>,
    cell_dofs: Vec<usize>,
    vertex_dof: HashMap<VertexId, usize>,
    edge_dofs: HashMap<Edge, Vec<usize>>,
    support: Vec<[f64; 2]>,
}

impl ScalarDofs {
    pub fn new(mesh: &Mesh, geometry: &MeshGeometry, degree: usize) -> Self {
        let element = ScalarElement::new(degree);
        let nloc = element.n_nodes();
        let k = degree;
        let mut slot = vec![usize::MAX; mesh.n_cells_total()];
        let mut cell_dofs = Vec::with_capacity(mesh.n_active_cells() * nloc);
        let mut vertex_dof: HashMap<VertexId, usize> = HashMap::new();
        let mut edge_dofs: HashMap<Edge, Vec<usize>> = HashMap::new();
        let mut support = Vec::new();
        let mut next = 0usize;

        for (s, &c) in mesh.active_cells().iter().enumerate() {
            slot[c] = s;
            let cell = mesh.cell(c);
            let map = geometry.cell(c);
            for a in 0..nloc {
                let dof = match element.node_location(a) {
                    NodeLocation::Vertex(i) => {
                        let v = cell.vertices[i];
                        *vertex_dof.entry(v).or_insert_with(|| {
                            support.push(mesh.vertex(v));
                            next += 1;
                            next - 1
                        })
                    }
                    NodeLocation::Face(f, s) => {
                        let (va, vb) = cell.face_vertices(f);
                        let list = edge_dofs.entry(Edge::new(va, vb)).or_insert_with(|| {
                            let list: Vec<usize> = (0..k - 1).map(|t| next + t).collect();
                            next += k - 1;
                            support.extend(std::iter::repeat_n([f64::NAN; 2], k - 1));
                            list
                        });
                        let t = (s * k as f64).round() as usize;
                        let pos = if va < vb { t - 1 } else { k - t - 1 };
                        let dof = list[pos];
                        if support[dof][0].is_nan() {
                            support[dof] = map.map(element.node_point(a));
                        }
                        dof
                    }
                    NodeLocation::Interior => {
                        support.push(map.map(element.node_point(a)));
                        next += 1;
                        next - 1
                    }
                };
                cell_dofs.push(dof);
            }
        }
        ScalarDofs {
            element,
            n_dofs: next,
            slot,
            cell_dofs,
            vertex_dof,
            edge_dofs,
            support,
        }
    }

    pub fn degree(&self) -> usize {
        self.element.degree()
    }

    pub fn element(&self) -> &ScalarElement {
        &self.element
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn dofs_per_cell(&self) -> usize {
        self.element.n_nodes()
    }

    pub fn cell_dofs(&self, c: CellId) -> &[usize] {
        let n = self.dofs_per_cell();
        let s = self.slot[c];
        &self.cell_dofs[s * n..(s + 1) * n]
    }

    pub fn vertex_dof(&self, v: VertexId) -> Option<usize> {
        self.vertex_dof.get(&v).copied()
    }

    /// Interior nodes of an edge, ordered from the smaller to the larger vertex id.
    pub fn edge_dofs(&self, e: Edge) -> Option<&[usize]> {
        self.edge_dofs.get(&e).map(Vec::as_slice)
    }

    /// All dofs on the segment from vertex `a` to `b`, in that direction.
    pub fn segment_dofs(&self, a: VertexId, b: VertexId) -> Option<Vec<usize>> {
        let mut out = vec![self.vertex_dof(a)?];
        if self.degree() > 1 {
            let inner = self.edge_dofs(Edge::new(a, b))?;
            if a < b {
                out.extend_from_slice(inner);
            } else {
                out.extend(inner.iter().rev());
            }
        }
        out.push(self.vertex_dof(b)?);
        Some(out)
    }

    /// Physical coordinates of each dof's node.
    pub fn support_points(&self) -> &[[f64; 2]] {
        &self.support
    }
}

/// Field components of the monolithic unknown.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Component {
    Vx,
    Vy,
    Ux,
    Uy,
    P,
}

impl Component {
    pub const ALL: [Component; 5] = [Component::Vx, Component::Vy, Component::Ux, Component::Uy, Component::P];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_velocity(self) -> bool {
        matches!(self, Component::Vx | Component::Vy)
    }

    pub fn is_displacement(self) -> bool {
        matches!(self, Component::Ux | Component::Uy)
    }
}

/// Mixed space `Q_kv^2 x Q_kv^2 x Q_kp` for velocity, displacement, pressure.
///
/// Global layout is `[vx | vy | ux | uy | p]`; cell-local layout follows the
/// same component order with each block in element node order.
#[derive(Clone, Debug)]
pub struct MixedSpace {
    pub velocity: ScalarDofs,
    pub pressure: ScalarDofs,
}

impl MixedSpace {
    pub fn new(mesh: &Mesh, geometry: &MeshGeometry, kv: usize, kp: usize) -> Self {
        MixedSpace {
            velocity: ScalarDofs::new(mesh, geometry, kv),
            pressure: ScalarDofs::new(mesh, geometry, kp),
        }
    }

    pub fn degrees(&self) -> (usize, usize) {
        (self.velocity.degree(), self.pressure.degree())
    }

    pub fn n_dofs(&self) -> usize {
        4 * self.velocity.n_dofs() + self.pressure.n_dofs()
    }

    pub fn scalar(&self, comp: Component) -> &ScalarDofs {
        if comp == Component::P {
            &self.pressure
        } else {
            &self.velocity
        }
    }

    /// Offset of a component block in the global vector.
    pub fn offset(&self, comp: Component) -> usize {
        comp.index() * self.velocity.n_dofs()
    }

    pub fn component_range(&self, comp: Component) -> std::ops::Range<usize> {
        let o = self.offset(comp);
        o..o + self.scalar(comp).n_dofs()
    }

    pub fn component_of(&self, dof: usize) -> Component {
        let nv = self.velocity.n_dofs();
        Component::ALL[(dof / nv).min(4)]
    }

    /// Offset of a component block inside the cell-local vector.
    pub fn local_offset(&self, comp: Component) -> usize {
        comp.index() * self.velocity.dofs_per_cell()
    }

    pub fn dofs_per_cell(&self) -> usize {
        4 * self.velocity.dofs_per_cell() + self.pressure.dofs_per_cell()
    }

    pub fn cell_dofs(&self, c: CellId, out: &mut Vec<usize>) {
        out.clear();
        for comp in Component::ALL {
            let o = self.offset(comp);
            out.extend(self.scalar(comp).cell_dofs(c).iter().map(|&d| d + o));
        }
    }

    /// Global dof of the scalar dof `d` of component `comp`.
    pub fn global(&self, comp: Component, d: usize) -> usize {
        self.offset(comp) + d
    }
}
