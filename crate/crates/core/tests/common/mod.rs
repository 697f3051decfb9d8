//! Helpers shared by the integration tests, including an independent
//! Eulerian Navier-Stokes assembler used as an oracle.

#![allow(dead_code)]

use std::path::PathBuf;

use fsidwr::fem::constraints::hanging_lines;
use fsidwr::fem::{CellValues, ConstraintSet, FaceValues, Quadrature2d, ScalarDofs};
use fsidwr::mesh::FaceNeighbor;
use fsidwr::{direct_solve, MaterialId, Mesh, MeshGeometry, SparseMatrix};
use std::sync::Arc;

pub fn repo_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

/// `n x n` grid on `[0, 1]^2`; boundary ids 0 left, 1 right, 2 bottom and top.
pub fn unit_square(n: usize) -> Mesh {
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let h = 1.0 / n as f64;
    let vertices = (0..=n).flat_map(|j| (0..=n).map(move |i| [i as f64 * h, j as f64 * h])).collect();
    let mut cells = Vec::new();
    for j in 0..n {
        for i in 0..n {
            cells.push(([id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)], MaterialId::FLUID));
        }
    }
    let mut faces = Vec::new();
    for k in 0..n {
        faces.push(((id(0, k), id(0, k + 1)), 0));
        faces.push(((id(n, k), id(n, k + 1)), 1));
        faces.push(((id(k, 0), id(k + 1, 0)), 2));
        faces.push(((id(k, n), id(k + 1, n)), 2));
    }
    Mesh::from_parts(vertices, cells, faces).unwrap()
}

pub type VelocityData<'b> = Box<dyn Fn([f64; 2]) -> [f64; 2] + 'b>;

/// Taylor-Hood `Q2/Q1` discretization of
/// `rho (grad v) v - div(rho nu (grad v + grad v^T)) + grad p = f`, `div v = 0`
/// in Eulerian coordinates, with the do-nothing correction on outflow
/// boundaries. Unknowns are ordered `[v_x | v_y | p]`.
pub struct FlowOracle<'a> {
    pub mesh: &'a Mesh,
    pub geometry: &'a MeshGeometry,
    pub rho: f64,
    pub nu: f64,
    /// Drop the convective term, leaving Stokes.
    pub stokes: bool,
    pub force: Box<dyn Fn([f64; 2]) -> [f64; 2]>,
    pub outflow: Vec<u32>,
    pub vel: ScalarDofs,
    pub pre: ScalarDofs,
    pub constraints: ConstraintSet,
}

impl<'a> FlowOracle<'a> {
    /// `dirichlet` lists boundary ids with velocity data, later entries
    /// winning at shared corners. `pin` fixes the pressure at one vertex.
    pub fn new<'b>(
        mesh: &'a Mesh,
        geometry: &'a MeshGeometry,
        rho: f64,
        nu: f64,
        dirichlet: Vec<(u32, VelocityData<'b>)>,
        outflow: Vec<u32>,
        pin: Option<(usize, f64)>,
    ) -> Self {
        let vel = ScalarDofs::new(mesh, geometry, 2);
        let pre = ScalarDofs::new(mesh, geometry, 1);
        let (nv, np) = (vel.n_dofs(), pre.n_dofs());
        let mut cs = ConstraintSet::new(2 * nv + np);
        for (d, e) in hanging_lines(mesh, &vel) {
            cs.set_line(d, e.clone(), 0.0);
            cs.set_line(d + nv, e.iter().map(|&(m, w)| (m + nv, w)).collect(), 0.0);
        }
        for (d, e) in hanging_lines(mesh, &pre) {
            cs.set_line(d + 2 * nv, e.iter().map(|&(m, w)| (m + 2 * nv, w)).collect(), 0.0);
        }
        let faces = mesh.boundary_faces();
        for (id, g) in &dirichlet {
            for &(c, f, fid) in &faces {
                if fid != *id {
                    continue;
                }
                let (a, b) = mesh.cell(c).face_vertices(f);
                for d in vel.segment_dofs(a, b).unwrap() {
                    let val = g(vel.support_points()[d]);
                    cs.set_line(d, Vec::new(), val[0]);
                    cs.set_line(d + nv, Vec::new(), val[1]);
                }
            }
        }
        if let Some((v, val)) = pin {
            cs.set_line(2 * nv + pre.vertex_dof(v).unwrap(), Vec::new(), val);
        }
        cs.close();
        FlowOracle {
            mesh,
            geometry,
            rho,
            nu,
            stokes: false,
            force: Box::new(|_| [0.0; 2]),
            outflow,
            vel,
            pre,
            constraints: cs,
        }
    }

    pub fn n_dofs(&self) -> usize {
        2 * self.vel.n_dofs() + self.pre.n_dofs()
    }

    fn cell_dofs(&self, c: usize) -> Vec<usize> {
        let nv = self.vel.n_dofs();
        let v = self.vel.cell_dofs(c);
        let mut out: Vec<usize> = v.to_vec();
        out.extend(v.iter().map(|d| d + nv));
        out.extend(self.pre.cell_dofs(c).iter().map(|d| d + 2 * nv));
        out
    }

    /// Condensed residual and Jacobian at `x`.
    pub fn assemble(&self, x: &[f64]) -> (SparseMatrix, Vec<f64>) {
        let hom = self.constraints.homogenized();
        let lists: Vec<Vec<usize>> = self.mesh.active_cells().iter().map(|&c| self.cell_dofs(c)).collect();
        let pattern = Arc::new(hom.sparsity_pattern(lists.iter().map(Vec::as_slice)));
        let mut a = SparseMatrix::new(pattern);
        let mut r = vec![0.0; self.n_dofs()];
        let quad = Quadrature2d::gauss(3);
        let mut cv = CellValues::new(self.vel.element(), &quad);
        let mut cp = CellValues::new(self.pre.element(), &quad);
        let mut fv = FaceValues::new(self.vel.element(), 3);
        let nb = self.vel.dofs_per_cell();
        let npb = self.pre.dofs_per_cell();
        let n = 2 * nb + npb;
        let mu = self.rho * self.nu;
        let rc = if self.stokes { 0.0 } else { self.rho };
        for (k, &c) in self.mesh.active_cells().iter().enumerate() {
            let dofs = &lists[k];
            let xl: Vec<f64> = dofs.iter().map(|&d| x[d]).collect();
            let map = self.geometry.cell(c);
            cv.reinit(map);
            cp.reinit(map);
            let mut ke = vec![0.0; n * n];
            let mut fe = vec![0.0; n];
            for q in 0..cv.n_points() {
                let w = cv.jxw[q];
                let mut v = [0.0; 2];
                let mut gv = [[0.0; 2]; 2];
                for a in 0..nb {
                    let (phi, g) = (cv.value(q, a), cv.grad(q, a));
                    for comp in 0..2 {
                        let coef = xl[comp * nb + a];
                        v[comp] += coef * phi;
                        gv[comp][0] += coef * g[0];
                        gv[comp][1] += coef * g[1];
                    }
                }
                let mut p = 0.0;
                for a in 0..npb {
                    p += xl[2 * nb + a] * cp.value(q, a);
                }
                let conv = [gv[0][0] * v[0] + gv[0][1] * v[1], gv[1][0] * v[0] + gv[1][1] * v[1]];
                let div = gv[0][0] + gv[1][1];
                let f = (self.force)(cv.points[q]);
                // test with velocity basis
                for i in 0..nb {
                    let (psi, gpsi) = (cv.value(q, i), cv.grad(q, i));
                    for ci in 0..2 {
                        let mut s = rc * conv[ci] * psi - f[ci] * psi - p * gpsi[ci];
                        for d in 0..2 {
                            s += mu * (gv[ci][d] + gv[d][ci]) * gpsi[d];
                        }
                        fe[ci * nb + i] += w * s;
                        let row = ci * nb + i;
                        for j in 0..nb {
                            let (phj, gj) = (cv.value(q, j), cv.grad(q, j));
                            for cj in 0..2 {
                                // d(conv_ci)/d(v_cj): grad(dv) v + grad(v) dv
                                let mut dconv = gv[ci][cj] * phj;
                                if ci == cj {
                                    dconv += gj[0] * v[0] + gj[1] * v[1];
                                }
                                let mut dvisc = 0.0;
                                for d in 0..2 {
                                    let dgv_cid = if ci == cj { gj[d] } else { 0.0 };
                                    let dgv_dci = if d == cj { gj[ci] } else { 0.0 };
                                    dvisc += mu * (dgv_cid + dgv_dci) * gpsi[d];
                                }
                                ke[row * n + cj * nb + j] += w * (rc * dconv * psi + dvisc);
                            }
                        }
                        for j in 0..npb {
                            ke[row * n + 2 * nb + j] -= w * cp.value(q, j) * gpsi[ci];
                        }
                    }
                }
                for i in 0..npb {
                    let qi = cp.value(q, i);
                    fe[2 * nb + i] += w * div * qi;
                    for j in 0..nb {
                        let gj = cv.grad(q, j);
                        ke[(2 * nb + i) * n + j] += w * gj[0] * qi;
                        ke[(2 * nb + i) * n + nb + j] += w * gj[1] * qi;
                    }
                }
            }
            for face in 0..4 {
                let FaceNeighbor::Boundary(id) = self.mesh.neighbor(c, face) else {
                    continue;
                };
                if !self.outflow.contains(&id) {
                    continue;
                }
                fv.reinit(map, face);
                let cell = fv.cell();
                for q in 0..fv.n_points() {
                    let (w, nrm) = (fv.jxw[q], fv.normals[q]);
                    let mut gv = [[0.0; 2]; 2];
                    for a in 0..nb {
                        let g = cell.grad(q, a);
                        for comp in 0..2 {
                            gv[comp][0] += xl[comp * nb + a] * g[0];
                            gv[comp][1] += xl[comp * nb + a] * g[1];
                        }
                    }
                    // subtract rho nu (grad v)^T n
                    for i in 0..nb {
                        let psi = cell.value(q, i);
                        for ci in 0..2 {
                            let t = gv[0][ci] * nrm[0] + gv[1][ci] * nrm[1];
                            fe[ci * nb + i] -= w * mu * t * psi;
                            for j in 0..nb {
                                let gj = cell.grad(q, j);
                                // d/d(v_cj) of gv[d][ci] n_d is gj[ci] n_cj
                                for cj in 0..2 {
                                    ke[(ci * nb + i) * n + cj * nb + j] -= w * mu * gj[ci] * nrm[cj] * psi;
                                }
                            }
                        }
                    }
                }
            }
            hom.distribute_local(dofs, Some(&ke), Some(&fe), Some(&mut a), Some(&mut r), false, &|_| false);
        }
        hom.finalize(Some(&mut a), Some(&mut r), false);
        (a, r)
    }

    /// Newton's method from the lifted Dirichlet data.
    pub fn solve(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n_dofs()];
        self.constraints.distribute(&mut x);
        let hom = self.constraints.homogenized();
        let mut r0 = None;
        for _ in 0..30 {
            let (a, r) = self.assemble(&x);
            let norm = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let r0 = *r0.get_or_insert(norm);
            if norm <= 1e-14 * r0.max(1.0) {
                return x;
            }
            let neg: Vec<f64> = r.iter().map(|v| -v).collect();
            let mut dx = direct_solve(&a, &neg).unwrap();
            hom.distribute(&mut dx);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
            self.constraints.distribute(&mut x);
            if dx.iter().fold(0.0f64, |m, v| m.max(v.abs())) < 1e-15 * x.iter().fold(1.0f64, |m, v| m.max(v.abs())) {
                return x;
            }
        }
        panic!("oracle Newton did not converge");
    }

    /// `(int |v - v_exact|^2)^(1/2)` with a 5-point rule.
    pub fn velocity_l2_error(&self, x: &[f64], exact: &dyn Fn([f64; 2]) -> [f64; 2]) -> f64 {
        let quad = Quadrature2d::gauss(5);
        let mut cv = CellValues::new(self.vel.element(), &quad);
        let nv = self.vel.n_dofs();
        let mut e2 = 0.0;
        for &c in self.mesh.active_cells() {
            cv.reinit(self.geometry.cell(c));
            let dofs = self.vel.cell_dofs(c);
            for q in 0..cv.n_points() {
                let mut v = [0.0; 2];
                for (a, &d) in dofs.iter().enumerate() {
                    v[0] += x[d] * cv.value(q, a);
                    v[1] += x[d + nv] * cv.value(q, a);
                }
                let ex = exact(cv.points[q]);
                e2 += cv.jxw[q] * ((v[0] - ex[0]).powi(2) + (v[1] - ex[1]).powi(2));
            }
        }
        e2.sqrt()
    }
}
