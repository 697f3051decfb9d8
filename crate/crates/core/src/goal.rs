//! Boundary force functionals, their derivatives, and point evaluations.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fem::values::evaluate_field;
use crate::fem::{Component, MeshGeometry, MixedSpace};
use crate::mesh::{CellId, FaceNeighbor, Mesh};
use crate::model::assembly::{gather, local_coefficients, test_basis, CellScratch, Discretization, FsiProblem};
use crate::model::dual::Dual;
use crate::model::physics::{fluid_traction, COMPONENT_SLOTS, NSLOT};
use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum GoalError {
    #[error("point ({0}, {1}) is outside the mesh")]
    OutsideMesh(f64, f64),
    #[error("boundary id {0} does not occur in the mesh")]
    UnknownBoundary(u32),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Force on the obstacle projected on `direction`, over the listed boundary
/// ids and optionally the fluid-solid interface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GoalSpec {
    pub name: String,
    pub boundary_ids: Vec<u32>,
    pub include_interface: bool,
    pub direction: [f64; 2],
    /// Multiplier applied to the force, e.g. to report a force coefficient.
    pub scale: f64,
}

impl Default for GoalSpec {
    fn default() -> Self {
        GoalSpec::drag(vec![80, 81])
    }
}

impl GoalSpec {
    pub fn drag(boundary_ids: Vec<u32>) -> Self {
        GoalSpec {
            name: "drag".into(),
            boundary_ids,
            include_interface: true,
            direction: [1.0, 0.0],
            scale: 1.0,
        }
    }

    pub fn lift(boundary_ids: Vec<u32>) -> Self {
        GoalSpec {
            name: "lift".into(),
            direction: [0.0, 1.0],
            ..Self::drag(boundary_ids)
        }
    }

    pub fn validate(&self, mesh: &Mesh) -> Result<(), GoalError> {
        let faces = mesh.boundary_faces();
        for &id in &self.boundary_ids {
            if !faces.iter().any(|&(_, _, b)| b == id) {
                return Err(GoalError::UnknownBoundary(id));
            }
        }
        Ok(())
    }

    /// Fluid-cell faces the functional integrates over.
    pub fn faces(&self, mesh: &Mesh) -> Vec<(CellId, usize)> {
        let mut out = Vec::new();
        for &c in mesh.active_cells() {
            if !mesh.cell(c).material.is_fluid() {
                continue;
            }
            for f in 0..4 {
                if let FaceNeighbor::Boundary(id) = mesh.neighbor(c, f) {
                    if self.boundary_ids.contains(&id) {
                        out.push((c, f));
                    }
                }
            }
        }
        if self.include_interface {
            out.extend(mesh.interface_faces());
        }
        out.sort_unstable();
        out
    }
}

/// `J(U) = -scale * int (J sigma F^-T n) . d`, with `n` the outward normal
/// of the fluid cell. The sign makes the force the one acting on the body.
pub fn evaluate_goal(problem: &FsiProblem, space: &MixedSpace, state: &[f64], spec: &GoalSpec) -> Result<f64, GoalError> {
    let n1d = space.velocity.degree() + 1;
    let mut scratch = CellScratch::new(space, space, n1d);
    let mut local = Vec::new();
    let mut total = 0.0;
    for (c, f) in spec.faces(problem.mesh) {
        scratch.reinit_face(problem.geometry, c, f);
        local_coefficients(space, state, c, &mut local);
        for q in 0..scratch.fsv.n_points() {
            let x = gather(&local, scratch.fsv.cell(), scratch.fsp.cell(), q);
            let t = fluid_traction(problem.params, &x, scratch.fsv.normals[q]).map_err(|e| ModelError::InvalidState { cell: c, det: e.det })?;
            total -= scratch.fsv.jxw[q] * (t[0] * spec.direction[0] + t[1] * spec.direction[1]);
        }
    }
    Ok(spec.scale * total)
}

/// `J'(U)(phi_i)` for every basis function of `test`, with `U` given in
/// `state_space`; condensed with the homogeneous constraints of `test`.
pub fn goal_derivative(problem: &FsiProblem, state_space: &MixedSpace, state: &[f64], test: &Discretization, spec: &GoalSpec) -> Result<Vec<f64>, GoalError> {
    let tspace = &test.space;
    let n1d = tspace.velocity.degree() + 1;
    let mut scratch = CellScratch::new(state_space, tspace, n1d);
    let mut rhs = vec![0.0; tspace.n_dofs()];
    let mut local = Vec::new();
    let mut basis = Vec::new();
    let mut dofs = Vec::new();
    let mut ge = vec![0.0; tspace.dofs_per_cell()];
    for (c, f) in spec.faces(problem.mesh) {
        scratch.reinit_face(problem.geometry, c, f);
        local_coefficients(state_space, state, c, &mut local);
        ge.iter_mut().for_each(|v| *v = 0.0);
        for q in 0..scratch.ftv.n_points() {
            let x = gather(&local, scratch.fsv.cell(), scratch.fsp.cell(), q);
            let xd: [Dual; NSLOT] = std::array::from_fn(|i| Dual::variable(x[i], i));
            let t = fluid_traction(problem.params, &xd, scratch.ftv.normals[q]).map_err(|e| ModelError::InvalidState { cell: c, det: e.det })?;
            let j = (t[0] * spec.direction[0] + t[1] * spec.direction[1]) * (-spec.scale * scratch.ftv.jxw[q]);
            test_basis(scratch.ftv.cell(), scratch.ftp.cell(), q, &mut basis);
            for (i, (comp, b)) in basis.iter().enumerate() {
                let s = COMPONENT_SLOTS[*comp];
                ge[i] += j.d[s[0]] * b[0] + j.d[s[1]] * b[1] + j.d[s[2]] * b[2];
            }
        }
        tspace.cell_dofs(c, &mut dofs);
        test.homogeneous.distribute_local(&dofs, None, Some(&ge), None, Some(&mut rhs), false, &|_| false);
    }
    test.homogeneous.set_zero(&mut rhs);
    Ok(rhs)
}

/// Active cell containing `p` and the reference coordinates of `p` in it.
pub fn locate_point(mesh: &Mesh, geometry: &MeshGeometry, p: [f64; 2]) -> Result<(CellId, [f64; 2]), GoalError> {
    let mut best: Option<(f64, CellId, [f64; 2])> = None;
    for &c in mesh.active_cells() {
        let corners = mesh.cell_corners(c);
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for q in corners {
            for d in 0..2 {
                lo[d] = lo[d].min(q[d]);
                hi[d] = hi[d].max(q[d]);
            }
        }
        // curved faces may bulge past the corner box
        let pad = 0.25 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
        if p[0] < lo[0] - pad || p[0] > hi[0] + pad || p[1] < lo[1] - pad || p[1] > hi[1] + pad {
            continue;
        }
        let Some(xi) = geometry.cell(c).inverse(p) else {
            continue;
        };
        let out = [xi[0], 1.0 - xi[0], xi[1], 1.0 - xi[1]].iter().fold(0.0f64, |m, &v| m.max(-v));
        if best.is_none_or(|(b, _, _)| out < b) {
            best = Some((out, c, xi));
        }
        if out == 0.0 {
            break;
        }
    }
    match best {
        Some((out, c, xi)) if out < 1e-8 => Ok((c, [xi[0].clamp(0.0, 1.0), xi[1].clamp(0.0, 1.0)])),
        _ => Err(GoalError::OutsideMesh(p[0], p[1])),
    }
}

pub fn evaluate_component(
    mesh: &Mesh,
    geometry: &MeshGeometry,
    space: &MixedSpace,
    state: &[f64],
    p: [f64; 2],
    comp: Component,
) -> Result<f64, GoalError> {
    let (c, xi) = locate_point(mesh, geometry, p)?;
    Ok(evaluate_field(space, geometry, state, c, xi, comp).0)
}

/// Pressure at each point.
pub fn evaluate_pressure_points(mesh: &Mesh, geometry: &MeshGeometry, space: &MixedSpace, state: &[f64], points: &[[f64; 2]]) -> Result<Vec<f64>, GoalError> {
    points
        .iter()
        .map(|&p| evaluate_component(mesh, geometry, space, state, p, Component::P))
        .collect()
}

/// Displacement `(u_x, u_y)` at a point.
pub fn evaluate_displacement_point(mesh: &Mesh, geometry: &MeshGeometry, space: &MixedSpace, state: &[f64], p: [f64; 2]) -> Result<[f64; 2], GoalError> {
    Ok([
        evaluate_component(mesh, geometry, space, state, p, Component::Ux)?,
        evaluate_component(mesh, geometry, space, state, p, Component::Uy)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FsiParameters;
    use crate::testing::grid;

    struct Setup {
        mesh: Mesh,
        geometry: MeshGeometry,
        params: FsiParameters,
        space: MixedSpace,
    }

    impl Setup {
        fn new(n: usize) -> Self {
            let mesh = grid(n);
            let geometry = MeshGeometry::new(&mesh, 1);
            let space = MixedSpace::new(&mesh, &geometry, 2, 1);
            Setup {
                mesh,
                geometry,
                params: FsiParameters::default(),
                space,
            }
        }

        fn problem(&self) -> FsiProblem<'_> {
            FsiProblem {
                mesh: &self.mesh,
                geometry: &self.geometry,
                params: &self.params,
                outflow_ids: &[],
            }
        }

        fn interpolate(&self, comp: Component, f: impl Fn([f64; 2]) -> f64, x: &mut [f64]) {
            let off = self.space.offset(comp);
            for (d, &p) in self.space.scalar(comp).support_points().iter().enumerate() {
                x[off + d] = f(p);
            }
        }

        fn goal(&self, x: &[f64], spec: &GoalSpec) -> f64 {
            evaluate_goal(&self.problem(), &self.space, x, spec).unwrap()
        }
    }

    fn around(ids: Vec<u32>, direction: [f64; 2]) -> GoalSpec {
        GoalSpec {
            include_interface: false,
            direction,
            ..GoalSpec::drag(ids)
        }
    }

    #[test]
    fn zero_state_has_no_force() {
        let s = Setup::new(3);
        let x = vec![0.0; s.space.n_dofs()];
        assert_eq!(s.goal(&x, &around(vec![0, 1, 2, 3], [1.0, 0.0])), 0.0);
    }

    #[test]
    fn constant_pressure_on_closed_curve_cancels() {
        let s = Setup::new(3);
        let mut x = vec![0.0; s.space.n_dofs()];
        s.interpolate(Component::P, |_| 7.0, &mut x);
        for d in [[1.0, 0.0], [0.0, 1.0]] {
            assert!(s.goal(&x, &around(vec![0, 1, 2, 3], d)).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_pressure_gives_area() {
        // int p n_x over the closed boundary equals int dp/dx = 1
        let s = Setup::new(2);
        let mut x = vec![0.0; s.space.n_dofs()];
        s.interpolate(Component::P, |p| p[0], &mut x);
        assert!((s.goal(&x, &around(vec![0, 1, 2, 3], [1.0, 0.0])) - 1.0).abs() < 1e-12);
        assert!(s.goal(&x, &around(vec![0, 1, 2, 3], [0.0, 1.0])).abs() < 1e-12);
    }

    #[test]
    fn shear_flow_drag_on_top_wall() {
        // v = (y, 0): sigma n = rho nu (1, 0) on the top wall
        let s = Setup::new(2);
        let mut x = vec![0.0; s.space.n_dofs()];
        s.interpolate(Component::Vx, |p| p[1], &mut x);
        let mu = s.params.rho_f * s.params.nu_f;
        let j = s.goal(&x, &around(vec![3], [1.0, 0.0]));
        assert!((j + mu).abs() < 1e-12, "{j}");
        let spec = GoalSpec { scale: 3.0, ..around(vec![3], [1.0, 0.0]) };
        assert!((s.goal(&x, &spec) + 3.0 * mu).abs() < 1e-12);
    }

    #[test]
    fn unknown_boundary_is_rejected() {
        let s = Setup::new(1);
        assert!(matches!(GoalSpec::drag(vec![9]).validate(&s.mesh), Err(GoalError::UnknownBoundary(9))));
    }

    #[test]
    fn point_evaluation_reproduces_quadratics() {
        let s = Setup::new(3);
        let mut x = vec![0.0; s.space.n_dofs()];
        let f = |p: [f64; 2]| 1.0 + p[0] * p[1] - p[1] * p[1];
        s.interpolate(Component::Ux, f, &mut x);
        s.interpolate(Component::Uy, |p| -2.0 * p[0], &mut x);
        let q = [0.37, 0.81];
        let u = evaluate_displacement_point(&s.mesh, &s.geometry, &s.space, &x, q).unwrap();
        assert!((u[0] - f(q)).abs() < 1e-13);
        assert!((u[1] + 2.0 * q[0]).abs() < 1e-13);
        assert!(matches!(locate_point(&s.mesh, &s.geometry, [1.5, 0.5]), Err(GoalError::OutsideMesh(..))));
    }
}
