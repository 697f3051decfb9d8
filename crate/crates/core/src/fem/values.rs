//! Shape values and physical gradients on cells and faces.

use crate::mesh::CellId;

use super::dofs::{Component, MixedSpace};
use super::element::{ScalarElement, Tabulation};
use super::geometry::{det2, inv2, GeometryMap, MeshGeometry};
use super::quadrature::{face_point, Quadrature1d, Quadrature2d};

/// Reference tabulation plus per-cell mapped quantities.
#[derive(Clone, Debug)]
pub struct CellValues {
    points_ref: Vec<[f64; 2]>,
    weights: Vec<f64>,
    tab: Tabulation,
    pub jxw: Vec<f64>,
    pub points: Vec<[f64; 2]>,
    grads: Vec<[f64; 2]>,
}

impl CellValues {
    pub fn new(element: &ScalarElement, quad: &Quadrature2d) -> Self {
        Self::with_points(element, quad.points.clone(), quad.weights.clone())
    }

    fn with_points(element: &ScalarElement, points_ref: Vec<[f64; 2]>, weights: Vec<f64>) -> Self {
        let tab = element.tabulate(&points_ref);
        let nq = points_ref.len();
        CellValues {
            grads: vec![[0.0; 2]; nq * tab.n_basis],
            jxw: vec![0.0; nq],
            points: vec![[0.0; 2]; nq],
            points_ref,
            weights,
            tab,
        }
    }

    /// Recomputes mapped data; returns the smallest Jacobian determinant.
    pub fn reinit(&mut self, map: &GeometryMap) -> f64 {
        let nb = self.tab.n_basis;
        let mut min_det = f64::INFINITY;
        for q in 0..self.points_ref.len() {
            let j = map.jacobian(self.points_ref[q]);
            let det = det2(&j);
            min_det = min_det.min(det);
            let inv = inv2(&j);
            self.jxw[q] = det * self.weights[q];
            self.points[q] = map.map(self.points_ref[q]);
            for a in 0..nb {
                let g = self.tab.grad(q, a);
                self.grads[q * nb + a] = [inv[0][0] * g[0] + inv[1][0] * g[1], inv[0][1] * g[0] + inv[1][1] * g[1]];
            }
        }
        min_det
    }

    pub fn n_points(&self) -> usize {
        self.points_ref.len()
    }

    pub fn n_basis(&self) -> usize {
        self.tab.n_basis
    }

    pub fn reference_points(&self) -> &[[f64; 2]] {
        &self.points_ref
    }

    #[inline]
    pub fn value(&self, q: usize, a: usize) -> f64 {
        self.tab.value(q, a)
    }

    #[inline]
    pub fn grad(&self, q: usize, a: usize) -> [f64; 2] {
        self.grads[q * self.tab.n_basis + a]
    }
}

/// Values on one face of a cell, with the outward unit normal.
#[derive(Clone, Debug)]
pub struct FaceValues {
    quad: Quadrature1d,
    cells: Vec<CellValues>,
    pub normals: Vec<[f64; 2]>,
    pub jxw: Vec<f64>,
    face: usize,
}

impl FaceValues {
    pub fn new(element: &ScalarElement, n_points: usize) -> Self {
        let quad = Quadrature1d::gauss(n_points);
        let cells = (0..4)
            .map(|f| {
                let pts = quad.points.iter().map(|&s| face_point(f, s)).collect();
                CellValues::with_points(element, pts, quad.weights.clone())
            })
            .collect();
        FaceValues {
            normals: vec![[0.0; 2]; n_points],
            jxw: vec![0.0; n_points],
            quad,
            cells,
            face: 0,
        }
    }

    pub fn reinit(&mut self, map: &GeometryMap, face: usize) {
        self.face = face;
        self.cells[face].reinit(map);
        let dir = match face {
            0 => [1.0, 0.0],
            1 => [0.0, 1.0],
            2 => [-1.0, 0.0],
            _ => [0.0, -1.0],
        };
        for q in 0..self.quad.len() {
            let j = map.jacobian(self.cells[face].points_ref[q]);
            let t = [j[0][0] * dir[0] + j[0][1] * dir[1], j[1][0] * dir[0] + j[1][1] * dir[1]];
            let len = (t[0] * t[0] + t[1] * t[1]).sqrt();
            self.normals[q] = [t[1] / len, -t[0] / len];
            self.jxw[q] = len * self.quad.weights[q];
        }
    }

    pub fn n_points(&self) -> usize {
        self.quad.len()
    }

    /// Cell values at this face's points (valid after `reinit`).
    pub fn cell(&self) -> &CellValues {
        &self.cells[self.face]
    }

    pub fn reference_points(&self) -> &[[f64; 2]] {
        &self.cells[self.face].points_ref
    }
}

/// Value and physical gradient of one component of a mixed-space field at a
/// reference point of a cell.
pub fn evaluate_field(
    space: &MixedSpace,
    geometry: &MeshGeometry,
    coefficients: &[f64],
    cell: CellId,
    xi: [f64; 2],
    comp: Component,
) -> (f64, [f64; 2]) {
    let scalar = space.scalar(comp);
    let element = scalar.element();
    let map = geometry.cell(cell);
    let inv = inv2(&map.jacobian(xi));
    let o = space.offset(comp);
    let mut val = 0.0;
    let mut gref = [0.0; 2];
    for (a, &d) in scalar.cell_dofs(cell).iter().enumerate() {
        let c = coefficients[o + d];
        val += c * element.value(a, xi);
        let g = element.gradient(a, xi);
        gref[0] += c * g[0];
        gref[1] += c * g[1];
    }
    let grad = [inv[0][0] * gref[0] + inv[1][0] * gref[1], inv[0][1] * gref[0] + inv[1][1] * gref[1]];
    (val, grad)
}
