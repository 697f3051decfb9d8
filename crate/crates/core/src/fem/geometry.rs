//! Cell geometry maps from the reference square to physical space.
//!
//! Straight cells use the bilinear map of their corners. Cells with a face on
//! a circle boundary use an isoparametric Lagrange map whose support points
//! come from transfinite interpolation of the exact arc.

use crate::mesh::{CellId, CircleManifold, Mesh};

use super::element::ScalarElement;

#[derive(Clone, Debug)]
pub enum GeometryMap {
    Bilinear([[f64; 2]; 4]),
    Lagrange {
        element: ScalarElement,
        points: Vec<[f64; 2]>,
    },
}

pub type Mat2 = [[f64; 2]; 2];

impl GeometryMap {
    pub fn map(&self, xi: [f64; 2]) -> [f64; 2] {
        match self {
            GeometryMap::Bilinear(p) => {
                let (x, y) = (xi[0], xi[1]);
                let w = [(1.0 - x) * (1.0 - y), x * (1.0 - y), x * y, (1.0 - x) * y];
                let mut out = [0.0; 2];
                for k in 0..4 {
                    out[0] += w[k] * p[k][0];
                    out[1] += w[k] * p[k][1];
                }
                out
            }
            GeometryMap::Lagrange { element, points } => {
                let mut out = [0.0; 2];
                for (a, pt) in points.iter().enumerate() {
                    let v = element.value(a, xi);
                    out[0] += v * pt[0];
                    out[1] += v * pt[1];
                }
                out
            }
        }
    }

    /// `J[i][j] = d x_i / d xi_j`.
    pub fn jacobian(&self, xi: [f64; 2]) -> Mat2 {
        match self {
            GeometryMap::Bilinear(p) => {
                let (x, y) = (xi[0], xi[1]);
                let dxi = [-(1.0 - y), 1.0 - y, y, -y];
                let deta = [-(1.0 - x), -x, x, 1.0 - x];
                let mut j = [[0.0; 2]; 2];
                for k in 0..4 {
                    for d in 0..2 {
                        j[d][0] += dxi[k] * p[k][d];
                        j[d][1] += deta[k] * p[k][d];
                    }
                }
                j
            }
            GeometryMap::Lagrange { element, points } => {
                let mut j = [[0.0; 2]; 2];
                for (a, pt) in points.iter().enumerate() {
                    let g = element.gradient(a, xi);
                    for d in 0..2 {
                        j[d][0] += g[0] * pt[d];
                        j[d][1] += g[1] * pt[d];
                    }
                }
                j
            }
        }
    }

    /// Newton inversion of the map; returns `None` if it fails to converge.
    pub fn inverse(&self, x: [f64; 2]) -> Option<[f64; 2]> {
        let mut xi = [0.5, 0.5];
        for _ in 0..50 {
            let r = self.map(xi);
            let res = [r[0] - x[0], r[1] - x[1]];
            let j = self.jacobian(xi);
            let det = det2(&j);
            if det.abs() < 1e-300 {
                return None;
            }
            let dxi = [
                (j[1][1] * res[0] - j[0][1] * res[1]) / det,
                (-j[1][0] * res[0] + j[0][0] * res[1]) / det,
            ];
            // damp large steps so the iterate stays near the cell
            let norm = dxi[0].abs().max(dxi[1].abs());
            let damp = if norm > 0.5 { 0.5 / norm } else { 1.0 };
            xi[0] -= damp * dxi[0];
            xi[1] -= damp * dxi[1];
            if norm < 1e-13 {
                return Some(xi);
            }
        }
        None
    }
}

pub fn det2(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn inv2(m: &Mat2) -> Mat2 {
    let d = det2(m);
    [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]
}

#[derive(Clone, Copy, Debug)]
enum EdgeCurve {
    Straight([f64; 2], [f64; 2]),
    Arc(CircleManifold, [f64; 2], [f64; 2]),
}

impl EdgeCurve {
    fn at(&self, s: f64) -> [f64; 2] {
        match *self {
            EdgeCurve::Straight(a, b) => [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])],
            EdgeCurve::Arc(c, a, b) => c.arc_point(a, b, s),
        }
    }
}

fn transfinite(curves: &[EdgeCurve; 4], corners: &[[f64; 2]; 4], xi: [f64; 2]) -> [f64; 2] {
    let (x, y) = (xi[0], xi[1]);
    let bottom = curves[0].at(x);
    let right = curves[1].at(y);
    let top = curves[2].at(1.0 - x);
    let left = curves[3].at(1.0 - y);
    let w = [(1.0 - x) * (1.0 - y), x * (1.0 - y), x * y, (1.0 - x) * y];
    let mut out = [0.0; 2];
    for d in 0..2 {
        out[d] = (1.0 - y) * bottom[d] + y * top[d] + (1.0 - x) * left[d] + x * right[d];
        for k in 0..4 {
            out[d] -= w[k] * corners[k][d];
        }
    }
    out
}

/// Geometry maps of all active cells of a mesh.
#[derive(Clone, Debug)]
pub struct MeshGeometry {
    maps: Vec<GeometryMap>,
    slot: Vec<usize>,
    degree: usize,
}

impl MeshGeometry {
    /// `degree` is the polynomial degree used on curved cells.
    pub fn new(mesh: &Mesh, degree: usize) -> Self {
        let mut slot = vec![usize::MAX; mesh.n_cells_total()];
        let mut maps = Vec::with_capacity(mesh.n_active_cells());
        for (k, &c) in mesh.active_cells().iter().enumerate() {
            slot[c] = k;
            maps.push(cell_map(mesh, c, degree));
        }
        MeshGeometry { maps, slot, degree }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn cell(&self, c: CellId) -> &GeometryMap {
        &self.maps[self.slot[c]]
    }
}

fn cell_map(mesh: &Mesh, c: CellId, degree: usize) -> GeometryMap {
    let corners = mesh.cell_corners(c);
    let curved: Vec<Option<CircleManifold>> = (0..4).map(|f| mesh.curved_face(c, f).copied()).collect();
    if degree <= 1 || curved.iter().all(Option::is_none) {
        return GeometryMap::Bilinear(corners);
    }
    let curves: [EdgeCurve; 4] = std::array::from_fn(|f| {
        let a = corners[f];
        let b = corners[(f + 1) % 4];
        match curved[f] {
            Some(circle) => EdgeCurve::Arc(circle, a, b),
            None => EdgeCurve::Straight(a, b),
        }
    });
    let element = ScalarElement::new(degree);
    let points = (0..element.n_nodes())
        .map(|a| transfinite(&curves, &corners, element.node_point(a)))
        .collect();
    GeometryMap::Lagrange { element, points }
}
