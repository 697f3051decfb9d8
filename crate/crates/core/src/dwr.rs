//! Higher-order adjoint, interpolation into the primal space and
//! partition-of-unity localized error indicators.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::fem::values::CellValues;
use crate::fem::{ConstraintSet, MixedSpace, Quadrature2d, ScalarDofs};
use crate::goal::{goal_derivative, GoalError, GoalSpec};
use crate::linalg::{Factorization, SparseMatrix};
use crate::mesh::{CellId, Mesh};
use crate::model::assembly::{flux, gather, is_outflow, local_coefficients, CellScratch, Discretization, FsiProblem};
use crate::model::physics::{do_nothing_correction, COMPONENT_SLOTS, NSLOT};
use crate::model::{assemble_jacobian, inf_norm, newton_solve, ModelError, NewtonReport, NewtonSettings, NonlinearProblem};

/// The linear adjoint system `A^T z = J'` seen as a nonlinear problem, so
/// that it can run through the Newton driver.
pub struct AdjointSystem<'a> {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub constraints: &'a ConstraintSet,
}

impl NonlinearProblem for AdjointSystem<'_> {
    fn residual(&self, z: &[f64]) -> Result<Vec<f64>, ModelError> {
        let mut r = vec![0.0; z.len()];
        self.matrix.matvec_transpose(z, &mut r);
        for (ri, bi) in r.iter_mut().zip(&self.rhs) {
            *ri -= bi;
        }
        // constrained entries are fixed by distribution, not by the equations
        self.constraints.set_zero(&mut r);
        Ok(r)
    }

    fn solve_linearized(&self, _z: &[f64], r: &[f64]) -> Result<Vec<f64>, ModelError> {
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let mut dz = Factorization::new(&self.matrix)?.solve_transpose(&neg)?;
        self.constraints.distribute(&mut dz);
        Ok(dz)
    }

    fn apply_constraints(&self, z: &mut [f64]) {
        self.constraints.distribute(z);
    }
}

/// Solves `A'(U_h)(phi, z) = J'(U_h)(phi)` in the space of `adjoint`, with
/// the primal state evaluated directly at the adjoint quadrature points.
pub fn solve_adjoint(
    problem: &FsiProblem,
    primal_space: &MixedSpace,
    primal: &[f64],
    adjoint: &Discretization,
    spec: &GoalSpec,
) -> Result<(Vec<f64>, NewtonReport), GoalError> {
    let (matrix, _) = assemble_jacobian(problem, primal_space, primal, adjoint)?;
    let rhs = goal_derivative(problem, primal_space, primal, adjoint, spec)?;
    let system = AdjointSystem {
        matrix,
        rhs,
        constraints: &adjoint.homogeneous,
    };
    let z0 = vec![0.0; adjoint.n_dofs()];
    let settings = NewtonSettings {
        abs_tol: 1e-300,
        ..Default::default()
    };
    let (z, report) = newton_solve(&system, &z0, &settings)?;
    Ok((z, report))
}

/// Nodal interpolation from a space of doubled degree: every low-order node
/// is a node of the high-order element, so values are read off directly.
/// Constraints of the low-order space are re-applied afterwards.
pub fn interpolate_down(mesh: &Mesh, high: &MixedSpace, z: &[f64], low: &MixedSpace, low_constraints: &ConstraintSet) -> Vec<f64> {
    let mut out = vec![0.0; low.n_dofs()];
    for comp in crate::fem::Component::ALL {
        let (hs, ls) = (high.scalar(comp), low.scalar(comp));
        let (kh, kl) = (hs.degree(), ls.degree());
        assert!(kh % kl == 0, "degree {kh} is not a multiple of {kl}");
        let r = kh / kl;
        let (ho, lo) = (high.offset(comp), low.offset(comp));
        for &c in mesh.active_cells() {
            let hd = hs.cell_dofs(c);
            for (a, &ld) in ls.cell_dofs(c).iter().enumerate() {
                let (i, j) = ls.element().node_ij(a);
                out[lo + ld] = z[ho + hd[hs.element().node_index(r * i, r * j)]];
            }
        }
    }
    low_constraints.distribute(&mut out);
    out
}

/// Localized error estimate.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    /// One indicator per node of the scalar `Q1` partition of unity.
    pub indicators: Vec<f64>,
    /// Sum of `|contribution|` per active cell, in active-cell order.
    pub cell_indicators: Vec<f64>,
    pub eta: f64,
    pub eta_abs: f64,
    pub true_error: Option<f64>,
    pub eff: Option<f64>,
    pub ind: Option<f64>,
}

impl ErrorEstimate {
    /// Fills the true error `J_ref - J_h` and the effectivity and indicator indices.
    pub fn with_reference(mut self, j_ref: Option<f64>, j_h: f64) -> Self {
        if let Some(r) = j_ref {
            let e = r - j_h;
            self.true_error = Some(e);
            self.eff = Some(self.eta.abs() / e.abs());
            self.ind = Some(self.eta_abs / e.abs());
        }
        self
    }
}

/// The partition of unity: the scalar `Q1` space with hanging constraints.
pub struct PartitionOfUnity {
    pub dofs: ScalarDofs,
    pub constraints: ConstraintSet,
}

impl PartitionOfUnity {
    pub fn new(mesh: &Mesh, geometry: &crate::fem::MeshGeometry) -> Self {
        let dofs = ScalarDofs::new(mesh, geometry, 1);
        let constraints = ConstraintSet::hanging(mesh, &dofs);
        PartitionOfUnity { dofs, constraints }
    }

    /// Number of free nodes.
    pub fn dimension(&self) -> usize {
        self.dofs.n_dofs() - self.constraints.n_constrained()
    }
}

/// The weight `z - i_h z` of the estimator, its two parts living in the
/// adjoint and the primal space.
pub struct Weight<'a> {
    pub high: &'a Discretization,
    pub z: &'a [f64],
    pub low: &'a Discretization,
    pub iz: &'a [f64],
}

/// Returns `-(residual density)` tested with `weight * chi` for each local
/// PU basis function, or with `weight` alone when `pu` is `None`.
#[allow(clippy::too_many_arguments)]
fn cell_contributions(
    problem: &FsiProblem,
    primal_space: &MixedSpace,
    primal: &[f64],
    weight: &Weight,
    pu: Option<&CellValues>,
    c: CellId,
    scratch: &mut WeightScratch,
    out: &mut Vec<f64>,
) -> Result<(), ModelError> {
    let fluid = problem.mesh.cell(c).material.is_fluid();
    let s = &mut scratch.state;
    s.reinit(problem.geometry, c);
    scratch.wh.reinit(problem.geometry, c);
    scratch.wl.reinit(problem.geometry, c);
    local_coefficients(primal_space, primal, c, &mut scratch.local);
    weight_coefficients(weight.high, weight.z, c, fluid, &mut scratch.zh);
    weight_coefficients(weight.low, weight.iz, c, fluid, &mut scratch.zl);
    let nb = pu.map_or(1, |v| v.n_basis());
    out.clear();
    out.resize(nb, 0.0);

    for q in 0..s.tv.n_points() {
        let x = gather(&scratch.local, &s.sv, &s.sp, q);
        let wh = gather(&scratch.zh, &scratch.wh.tv, &scratch.wh.tp, q);
        let wl = gather(&scratch.zl, &scratch.wl.tv, &scratch.wl.tp, q);
        let w: [f64; NSLOT] = std::array::from_fn(|k| wh[k] - wl[k]);
        let f = flux(problem.params, fluid, &x).map_err(|e| ModelError::InvalidState { cell: c, det: e.det })?;
        let jxw = s.tv.jxw[q];
        for (a, o) in out.iter_mut().enumerate() {
            let (chi, gchi) = match pu {
                Some(v) => (v.value(q, a), v.grad(q, a)),
                None => (1.0, [0.0, 0.0]),
            };
            let mut sum = 0.0;
            for slots in COMPONENT_SLOTS {
                let (v, gx, gy) = (w[slots[0]], w[slots[1]], w[slots[2]]);
                sum += f[slots[0]] * v * chi + f[slots[1]] * (gx * chi + v * gchi[0]) + f[slots[2]] * (gy * chi + v * gchi[1]);
            }
            *o -= jxw * sum;
        }
    }

    if fluid {
        for face in 0..4 {
            if !is_outflow(problem, c, face) {
                continue;
            }
            s.reinit_face(problem.geometry, c, face);
            scratch.wh.reinit_face(problem.geometry, c, face);
            scratch.wl.reinit_face(problem.geometry, c, face);
            let pu_face = pu.map(|_| {
                scratch.pu_face.reinit(problem.geometry.cell(c), face);
                &scratch.pu_face
            });
            for q in 0..s.ftv.n_points() {
                let x = gather(&scratch.local, s.fsv.cell(), s.fsp.cell(), q);
                let wh = gather(&scratch.zh, scratch.wh.ftv.cell(), scratch.wh.ftp.cell(), q);
                let wl = gather(&scratch.zl, scratch.wl.ftv.cell(), scratch.wl.ftp.cell(), q);
                let g = do_nothing_correction(problem.params, &x, s.ftv.normals[q]).map_err(|e| ModelError::InvalidState { cell: c, det: e.det })?;
                let jxw = s.ftv.jxw[q];
                let gw = g[0] * (wh[0] - wl[0]) + g[1] * (wh[1] - wl[1]);
                for (a, o) in out.iter_mut().enumerate() {
                    let chi = pu_face.map_or(1.0, |v| v.cell().value(q, a));
                    // the residual subtracts the correction
                    *o += jxw * gw * chi;
                }
            }
        }
    }
    Ok(())
}

/// Local weight coefficients. In fluid cells the displacement weight must
/// lie in the mesh-motion test space, so constraint masters on the
/// interface are dropped before summing.
fn weight_coefficients(disc: &Discretization, z: &[f64], c: CellId, fluid: bool, out: &mut Vec<f64>) {
    let space = &disc.space;
    let mut exp = Vec::new();
    out.clear();
    for comp in crate::fem::Component::ALL {
        let o = space.offset(comp);
        for &d in space.scalar(comp).cell_dofs(c) {
            let g = o + d;
            if fluid && comp.is_displacement() {
                disc.homogeneous.expand(g, &mut exp);
                out.push(exp.iter().filter(|&&(m, _)| !disc.interface_u[m]).map(|&(m, w)| w * z[m]).sum());
            } else {
                out.push(z[g]);
            }
        }
    }
}

struct WeightScratch {
    state: CellScratch,
    wh: CellScratch,
    wl: CellScratch,
    pu_face: crate::fem::FaceValues,
    local: Vec<f64>,
    zh: Vec<f64>,
    zl: Vec<f64>,
}

impl WeightScratch {
    fn new(primal_space: &MixedSpace, weight: &Weight) -> Self {
        let n1d = weight.high.space.velocity.degree() + 1;
        WeightScratch {
            state: CellScratch::new(primal_space, primal_space, n1d),
            wh: CellScratch::new(&weight.high.space, &weight.high.space, n1d),
            wl: CellScratch::new(&weight.low.space, &weight.low.space, n1d),
            pu_face: crate::fem::FaceValues::new(&crate::fem::ScalarElement::new(1), n1d),
            local: Vec::new(),
            zh: Vec::new(),
            zl: Vec::new(),
        }
    }
}

/// PU-localized indicators `eta_i = -R(U_h)((z - i_h z) chi_i)`.
pub fn compute_indicators(
    problem: &FsiProblem,
    primal_space: &MixedSpace,
    primal: &[f64],
    weight: &Weight,
    pu: &PartitionOfUnity,
) -> Result<ErrorEstimate, ModelError> {
    let mesh = problem.mesh;
    let n1d = weight.high.space.velocity.degree() + 1;
    let quad = Quadrature2d::gauss(n1d);
    let mut chi = CellValues::new(pu.dofs.element(), &quad);
    let mut scratch = WeightScratch::new(primal_space, weight);
    let mut eta = vec![0.0; pu.dofs.n_dofs()];
    let mut cell_indicators = Vec::with_capacity(mesh.n_active_cells());
    let mut local = Vec::new();
    for &c in mesh.active_cells() {
        chi.reinit(problem.geometry.cell(c));
        cell_contributions(problem, primal_space, primal, weight, Some(&chi), c, &mut scratch, &mut local)?;
        cell_indicators.push(local.iter().map(|v| v.abs()).sum());
        pu.constraints
            .distribute_local(pu.dofs.cell_dofs(c), None, Some(&local), None, Some(&mut eta), false, &|_| false);
    }
    let total: f64 = eta.iter().sum();
    let abs: f64 = eta.iter().map(|v| v.abs()).sum();
    Ok(ErrorEstimate {
        indicators: eta,
        cell_indicators,
        eta: total,
        eta_abs: abs,
        ..Default::default()
    })
}

/// `-R(U_h)(z - i_h z)` assembled without the partition of unity.
pub fn weighted_residual(problem: &FsiProblem, primal_space: &MixedSpace, primal: &[f64], weight: &Weight) -> Result<f64, ModelError> {
    let mut scratch = WeightScratch::new(primal_space, weight);
    let mut local = Vec::new();
    let mut total = 0.0;
    for &c in problem.mesh.active_cells() {
        cell_contributions(problem, primal_space, primal, weight, None, c, &mut scratch, &mut local)?;
        total += local[0];
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarkingStrategy {
    /// Cells touching a node with `|eta_i| >= alpha * eta_abs / M_el`.
    #[default]
    PuThreshold,
    /// Cells touching the nodes holding the largest `theta` fraction of nodes by `|eta_i|`.
    DofFraction,
}

/// Cells to refine. `param` is `alpha` for the threshold strategy and
/// `theta` for the fraction strategy.
pub fn mark_cells(estimate: &ErrorEstimate, mesh: &Mesh, pu: &PartitionOfUnity, strategy: MarkingStrategy, param: f64) -> BTreeSet<CellId> {
    let eta = &estimate.indicators;
    let selected: Vec<bool> = match strategy {
        MarkingStrategy::PuThreshold => {
            let threshold = param * estimate.eta_abs / mesh.n_active_cells() as f64;
            eta.iter().map(|v| v.abs() >= threshold && *v != 0.0).collect()
        }
        MarkingStrategy::DofFraction => {
            let mut order: Vec<usize> = (0..eta.len()).filter(|&i| !pu.constraints.is_constrained(i)).collect();
            order.sort_by(|&a, &b| eta[b].abs().total_cmp(&eta[a].abs()).then(a.cmp(&b)));
            let take = ((param * order.len() as f64).ceil() as usize).min(order.len());
            let mut sel = vec![false; eta.len()];
            for &i in &order[..take] {
                sel[i] = eta[i] != 0.0;
            }
            sel
        }
    };
    let mut marks = BTreeSet::new();
    let mut exp = Vec::new();
    for &c in mesh.active_cells() {
        'cell: for &d in pu.dofs.cell_dofs(c) {
            pu.constraints.expand(d, &mut exp);
            for &(m, _) in &exp {
                if selected[m] {
                    marks.insert(c);
                    break 'cell;
                }
            }
        }
    }
    marks
}

/// `|r|_inf` of a vector, re-exported for reports.
pub fn residual_norm(r: &[f64]) -> f64 {
    inf_norm(r)
}
