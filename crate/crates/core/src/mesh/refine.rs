use std::collections::BTreeSet;

use super::{Cell, CellId, Edge, FaceNeighbor, Mesh, VertexId};

impl Mesh {
    /// Refines the marked active cells isotropically and closes the marking so
    /// the result stays 1-irregular. Unknown or inactive ids are ignored.
    pub fn refine(&self, marks: &BTreeSet<CellId>) -> Mesh {
        let mut out = self.clone();
        let closed = out.close_marking(marks);
        if closed.is_empty() {
            return out;
        }
        for &c in &closed {
            out.split_cell(c);
        }
        out.active = (0..out.cells.len()).filter(|&c| out.cells[c].is_active()).collect();
        out.rebuild_topology();
        out.bump_generation();
        out
    }

    /// Refines every active cell `times` times.
    pub fn refine_globally(&self, times: usize) -> Mesh {
        let mut m = self.clone();
        for _ in 0..times {
            let all: BTreeSet<CellId> = m.active.iter().copied().collect();
            m = m.refine(&all);
        }
        m
    }

    fn close_marking(&self, marks: &BTreeSet<CellId>) -> BTreeSet<CellId> {
        let mut set: BTreeSet<CellId> = marks
            .iter()
            .copied()
            .filter(|&c| c < self.cells.len() && self.cells[c].is_active())
            .collect();
        let mut queue: Vec<CellId> = set.iter().copied().collect();
        // a refined cell must not sit next to an active coarser neighbor
        while let Some(c) = queue.pop() {
            for f in 0..4 {
                if let FaceNeighbor::Coarser { cell, .. } = self.neighbor(c, f) {
                    if set.insert(cell) {
                        queue.push(cell);
                    }
                }
            }
        }
        set
    }

    fn midpoint_vertex(&mut self, a: VertexId, b: VertexId) -> VertexId {
        let key = Edge::new(a, b);
        if let Some(&m) = self.midpoints.get(&key) {
            return m;
        }
        let pa = self.vertices[a];
        let pb = self.vertices[b];
        let bid = self.boundary.get(&key).copied();
        let pos = match bid.and_then(|id| self.manifolds.get(&id)) {
            Some(circle) => circle.arc_point(pa, pb, 0.5),
            None => [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])],
        };
        let m = self.vertices.len();
        self.vertices.push(pos);
        self.midpoints.insert(key, m);
        for child in [Edge::new(a, m), Edge::new(m, b)] {
            self.edge_parent.insert(child, key);
            if let Some(id) = bid {
                self.boundary.insert(child, id);
            }
        }
        m
    }

    fn split_cell(&mut self, c: CellId) {
        let cell = self.cells[c].clone();
        let v = cell.vertices;
        let m: Vec<VertexId> = (0..4)
            .map(|f| self.midpoint_vertex(v[f], v[(f + 1) % 4]))
            .collect();
        // transfinite center: exact for bilinear cells, follows curved faces otherwise
        let mut center = [0.0; 2];
        for k in 0..4 {
            for d in 0..2 {
                center[d] += 0.5 * self.vertices[m[k]][d] - 0.25 * self.vertices[v[k]][d];
            }
        }
        let z = self.vertices.len();
        self.vertices.push(center);
        let quads = [
            [v[0], m[0], z, m[3]],
            [m[0], v[1], m[1], z],
            [z, m[1], v[2], m[2]],
            [m[3], z, m[2], v[3]],
        ];
        let first = self.cells.len();
        for q in quads {
            self.cells.push(Cell {
                vertices: q,
                material: cell.material,
                level: cell.level + 1,
                parent: Some(c),
                children: None,
            });
        }
        self.cells[c].children = Some([first, first + 1, first + 2, first + 3]);
    }
}
