//! Cell and face loops assembling the residual and Jacobian of the
//! monolithic system.

use std::sync::{Arc, OnceLock};

use crate::fem::values::{CellValues, FaceValues};
use crate::fem::{Component, ConstraintSet, DirichletBc, MeshGeometry, MixedSpace, Quadrature2d};
use crate::linalg::{SparseMatrix, SparsityPattern};
use crate::mesh::{BoundaryId, CellId, FaceNeighbor, Mesh};

use super::dual::{Dual, Real};
use super::params::FsiParameters;
use super::physics::{do_nothing_correction, fluid_flux, solid_flux, InvalidState, COMPONENT_SLOTS, NSLOT};
use super::ModelError;

/// Geometry, material data and natural boundary information shared by all
/// assembly calls on one mesh.
#[derive(Clone, Copy)]
pub struct FsiProblem<'a> {
    pub mesh: &'a Mesh,
    pub geometry: &'a MeshGeometry,
    pub params: &'a FsiParameters,
    /// Boundary ids carrying the do-nothing condition.
    pub outflow_ids: &'a [BoundaryId],
}

/// A mixed space with its constraints and the displacement dofs on the
/// fluid-solid interface.
#[derive(Debug)]
pub struct Discretization {
    pub space: MixedSpace,
    pub constraints: ConstraintSet,
    pub homogeneous: ConstraintSet,
    /// Displacement dofs on the interface; the fluid mesh-motion equation
    /// is not tested with them.
    pub interface_u: Vec<bool>,
    pattern: OnceLock<Arc<SparsityPattern>>,
}

impl Discretization {
    pub fn new(mesh: &Mesh, geometry: &MeshGeometry, kv: usize, kp: usize, bcs: &[DirichletBc]) -> Self {
        let space = MixedSpace::new(mesh, geometry, kv, kp);
        let constraints = ConstraintSet::build(mesh, &space, bcs);
        for c in constraints.conflicts() {
            log::debug!(
                "dof {} prescribed by ids {} and {}, keeping {}",
                c.dof,
                c.dropped.0,
                c.kept.0,
                c.kept.0
            );
        }
        let homogeneous = constraints.homogenized();
        let interface_u = interface_displacement_dofs(mesh, &space);
        Discretization {
            space,
            constraints,
            homogeneous,
            interface_u,
            pattern: OnceLock::new(),
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.space.n_dofs()
    }

    pub fn pattern(&self, mesh: &Mesh) -> Arc<SparsityPattern> {
        self.pattern
            .get_or_init(|| {
                let mut lists = Vec::with_capacity(mesh.n_active_cells());
                let mut buf = Vec::new();
                for &c in mesh.active_cells() {
                    self.space.cell_dofs(c, &mut buf);
                    lists.push(buf.clone());
                }
                Arc::new(self.homogeneous.sparsity_pattern(lists.iter().map(Vec::as_slice)))
            })
            .clone()
    }
}

fn interface_displacement_dofs(mesh: &Mesh, space: &MixedSpace) -> Vec<bool> {
    let mut flag = vec![false; space.n_dofs()];
    for &c in mesh.active_cells() {
        let mat = mesh.cell(c).material;
        for f in 0..4 {
            let other = match mesh.neighbor(c, f) {
                FaceNeighbor::Boundary(_) => continue,
                FaceNeighbor::Conforming { cell, .. } | FaceNeighbor::Coarser { cell, .. } => cell,
                FaceNeighbor::Finer { cells } => cells[0].0,
            };
            if mesh.cell(other).material == mat {
                continue;
            }
            let (a, b) = mesh.cell(c).face_vertices(f);
            for d in space.velocity.segment_dofs(a, b).expect("face dofs") {
                flag[space.global(Component::Ux, d)] = true;
                flag[space.global(Component::Uy, d)] = true;
            }
        }
    }
    flag
}

/// Local coefficients of a field on one cell, per component.
pub(crate) fn local_coefficients(space: &MixedSpace, coeffs: &[f64], c: CellId, out: &mut Vec<f64>) {
    out.clear();
    for comp in Component::ALL {
        let o = space.offset(comp);
        out.extend(space.scalar(comp).cell_dofs(c).iter().map(|&d| coeffs[o + d]));
    }
}

/// Packs the state at quadrature point `q` into the 15 slots.
pub(crate) fn gather(local: &[f64], vv: &CellValues, pv: &CellValues, q: usize) -> [f64; NSLOT] {
    let mut x = [0.0; NSLOT];
    let nv = vv.n_basis();
    for (comp, slots) in COMPONENT_SLOTS.iter().enumerate() {
        let (vals, base) = if comp < 4 { (vv, comp * nv) } else { (pv, 4 * nv) };
        let mut s = [0.0; 3];
        for a in 0..vals.n_basis() {
            let c = local[base + a];
            if c == 0.0 {
                continue;
            }
            let g = vals.grad(q, a);
            s[0] += c * vals.value(q, a);
            s[1] += c * g[0];
            s[2] += c * g[1];
        }
        for r in 0..3 {
            x[slots[r]] = s[r];
        }
    }
    x
}

/// Basis values `[phi, dphi/dx, dphi/dy]` of every local test function at `q`.
pub(crate) fn test_basis(vv: &CellValues, pv: &CellValues, q: usize, out: &mut Vec<(usize, [f64; 3])>) {
    out.clear();
    for comp in 0..5 {
        let vals = if comp < 4 { vv } else { pv };
        for a in 0..vals.n_basis() {
            let g = vals.grad(q, a);
            out.push((comp, [vals.value(q, a), g[0], g[1]]));
        }
    }
}

pub(crate) fn flux<T: Real>(params: &FsiParameters, fluid: bool, x: &[T; NSLOT]) -> Result<[T; NSLOT], InvalidState> {
    if fluid {
        fluid_flux(params, x)
    } else {
        solid_flux(params, x)
    }
}

fn to_dual(x: &[f64; NSLOT]) -> [Dual; NSLOT] {
    std::array::from_fn(|i| Dual::variable(x[i], i))
}

/// Per-cell scratch for evaluating a state from one space while testing with
/// another on a common quadrature rule.
pub(crate) struct CellScratch {
    pub sv: CellValues,
    pub sp: CellValues,
    pub tv: CellValues,
    pub tp: CellValues,
    pub fsv: FaceValues,
    pub fsp: FaceValues,
    pub ftv: FaceValues,
    pub ftp: FaceValues,
}

impl CellScratch {
    pub fn new(state: &MixedSpace, test: &MixedSpace, n1d: usize) -> Self {
        let quad = Quadrature2d::gauss(n1d);
        let se = state.velocity.element();
        let sp = state.pressure.element();
        let te = test.velocity.element();
        let tp = test.pressure.element();
        CellScratch {
            sv: CellValues::new(se, &quad),
            sp: CellValues::new(sp, &quad),
            tv: CellValues::new(te, &quad),
            tp: CellValues::new(tp, &quad),
            fsv: FaceValues::new(se, n1d),
            fsp: FaceValues::new(sp, n1d),
            ftv: FaceValues::new(te, n1d),
            ftp: FaceValues::new(tp, n1d),
        }
    }

    pub fn reinit(&mut self, geometry: &MeshGeometry, c: CellId) {
        let map = geometry.cell(c);
        self.sv.reinit(map);
        self.sp.reinit(map);
        self.tv.reinit(map);
        self.tp.reinit(map);
    }

    pub fn reinit_face(&mut self, geometry: &MeshGeometry, c: CellId, f: usize) {
        let map = geometry.cell(c);
        self.fsv.reinit(map, f);
        self.fsp.reinit(map, f);
        self.ftv.reinit(map, f);
        self.ftp.reinit(map, f);
    }
}

pub(crate) fn is_outflow(problem: &FsiProblem, c: CellId, f: usize) -> bool {
    matches!(problem.mesh.neighbor(c, f), FaceNeighbor::Boundary(id) if problem.outflow_ids.contains(&id))
}

/// Residual `A(U)(psi) - F(psi)` for all test functions of `test`, condensed
/// with its homogeneous constraints.
pub fn assemble_residual(problem: &FsiProblem, state_space: &MixedSpace, state: &[f64], test: &Discretization) -> Result<Vec<f64>, ModelError> {
    assemble(problem, state_space, state, test, false).map(|(_, r)| r)
}

/// Jacobian and residual at `state`. Rows and columns follow the test space;
/// constrained rows carry a scaled identity.
pub fn assemble_jacobian(
    problem: &FsiProblem,
    state_space: &MixedSpace,
    state: &[f64],
    test: &Discretization,
) -> Result<(SparseMatrix, Vec<f64>), ModelError> {
    assemble(problem, state_space, state, test, true).map(|(m, r)| (m.expect("matrix requested"), r))
}

fn assemble(
    problem: &FsiProblem,
    state_space: &MixedSpace,
    state: &[f64],
    test: &Discretization,
    want_matrix: bool,
) -> Result<(Option<SparseMatrix>, Vec<f64>), ModelError> {
    let mesh = problem.mesh;
    let tspace = &test.space;
    let n1d = tspace.velocity.degree() + 1;
    let mut scratch = CellScratch::new(state_space, tspace, n1d);
    let n = tspace.n_dofs();
    let nloc = tspace.dofs_per_cell();
    let mut matrix = want_matrix.then(|| SparseMatrix::new(test.pattern(mesh)));
    let mut rhs = vec![0.0; n];
    let mut dofs = Vec::new();
    let mut local = Vec::new();
    let mut basis = Vec::new();
    let mut re = vec![0.0; nloc];
    let mut ke = vec![0.0; if want_matrix { nloc * nloc } else { 0 }];
    let mut g = vec![[0.0; NSLOT]; nloc];

    for &c in mesh.active_cells() {
        let fluid = mesh.cell(c).material.is_fluid();
        scratch.reinit(problem.geometry, c);
        local_coefficients(state_space, state, c, &mut local);
        re.iter_mut().for_each(|v| *v = 0.0);
        ke.iter_mut().for_each(|v| *v = 0.0);

        for q in 0..scratch.tv.n_points() {
            let w = scratch.tv.jxw[q];
            let x = gather(&local, &scratch.sv, &scratch.sp, q);
            test_basis(&scratch.tv, &scratch.tp, q, &mut basis);
            if want_matrix {
                let out = flux(problem.params, fluid, &to_dual(&x)).map_err(|e| ModelError::InvalidState { cell: c, det: e.det })?;
                add_cell_terms(&out, w, &basis, &mut re, Some((&mut ke, &mut g)));
            } else {
                let out = flux(problem.params, fluid, &x).map_err(|e| ModelError::InvalidState { cell: c, det: e.det })?;
                for (i, (comp, b)) in basis.iter().enumerate() {
                    let s = COMPONENT_SLOTS[*comp];
                    re[i] += w * (out[s[0]] * b[0] + out[s[1]] * b[1] + out[s[2]] * b[2]);
                }
            }
        }

        if fluid {
            for f in 0..4 {
                if !is_outflow(problem, c, f) {
                    continue;
                }
                scratch.reinit_face(problem.geometry, c, f);
                for q in 0..scratch.ftv.n_points() {
                    let w = scratch.ftv.jxw[q];
                    let nrm = scratch.ftv.normals[q];
                    let x = gather(&local, scratch.fsv.cell(), scratch.fsp.cell(), q);
                    test_basis(scratch.ftv.cell(), scratch.ftp.cell(), q, &mut basis);
                    let xd = to_dual(&x);
                    let corr = do_nothing_correction(problem.params, &xd, nrm).map_err(|e| ModelError::InvalidState { cell: c, det: e.det })?;
                    for (i, (comp, b)) in basis.iter().enumerate() {
                        if *comp > 1 {
                            continue;
                        }
                        let gi = corr[*comp];
                        re[i] -= w * gi.v * b[0];
                        if want_matrix {
                            for (j, (cj, bj)) in basis.iter().enumerate() {
                                let s = COMPONENT_SLOTS[*cj];
                                let d = gi.d[s[0]] * bj[0] + gi.d[s[1]] * bj[1] + gi.d[s[2]] * bj[2];
                                ke[i * nloc + j] -= w * d * b[0];
                            }
                        }
                    }
                }
            }
        }

        tspace.cell_dofs(c, &mut dofs);
        let skip = |m: usize| fluid && test.interface_u[m];
        test.homogeneous.distribute_local(
            &dofs,
            want_matrix.then_some(ke.as_slice()),
            Some(&re),
            matrix.as_mut(),
            Some(&mut rhs),
            false,
            &skip,
        );
    }
    test.homogeneous.finalize(matrix.as_mut(), Some(&mut rhs), false);
    Ok((matrix, rhs))
}

/// Adds `w * flux . psi_i` to the cell vector and, if requested, the
/// linearization to the cell matrix. `out[s].d[t]` is `d flux_s / d x_t`.
fn add_cell_terms(out: &[Dual; NSLOT], w: f64, basis: &[(usize, [f64; 3])], re: &mut [f64], mat: Option<(&mut Vec<f64>, &mut Vec<[f64; NSLOT]>)>) {
    let nloc = basis.len();
    // which slot pairs couple at all
    let mut col_used = [false; NSLOT];
    for o in out.iter() {
        for t in 0..NSLOT {
            if o.d[t] != 0.0 {
                col_used[t] = true;
            }
        }
    }
    let Some((ke, g)) = mat else {
        for (i, (comp, b)) in basis.iter().enumerate() {
            let s = COMPONENT_SLOTS[*comp];
            re[i] += w * (out[s[0]].v * b[0] + out[s[1]].v * b[1] + out[s[2]].v * b[2]);
        }
        return;
    };
    for (i, (comp, b)) in basis.iter().enumerate() {
        let s = COMPONENT_SLOTS[*comp];
        re[i] += w * (out[s[0]].v * b[0] + out[s[1]].v * b[1] + out[s[2]].v * b[2]);
        let gi = &mut g[i];
        for t in 0..NSLOT {
            gi[t] = if col_used[t] {
                w * (out[s[0]].d[t] * b[0] + out[s[1]].d[t] * b[1] + out[s[2]].d[t] * b[2])
            } else {
                0.0
            };
        }
    }
    let comp_used: [bool; 5] = std::array::from_fn(|c| COMPONENT_SLOTS[c].iter().any(|&t| col_used[t]));
    for i in 0..nloc {
        let gi = &g[i];
        if gi.iter().all(|&v| v == 0.0) {
            continue;
        }
        let row = &mut ke[i * nloc..(i + 1) * nloc];
        for (j, (cj, bj)) in basis.iter().enumerate() {
            if !comp_used[*cj] {
                continue;
            }
            let s = COMPONENT_SLOTS[*cj];
            row[j] += gi[s[0]] * bj[0] + gi[s[1]] * bj[1] + gi[s[2]] * bj[2];
        }
    }
}
