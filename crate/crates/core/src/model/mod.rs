//! The stationary monolithic ALE fluid-structure interaction model:
//! pointwise physics, assembly and the Newton solver.

pub mod assembly;
pub mod dual;
pub mod newton;
pub mod params;
pub mod physics;

use thiserror::Error;

use crate::fem::DirichletBc;
use crate::linalg::{direct_solve, LinalgError};
use crate::mesh::CellId;

pub use assembly::{assemble_jacobian, assemble_residual, Discretization, FsiProblem};
pub use newton::{inf_norm, newton_solve, NewtonReport, NewtonSettings, NonlinearProblem};
pub use params::FsiParameters;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("deformation gradient determinant {det:.3e} is not positive in cell {cell}")]
    InvalidState { cell: CellId, det: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("Newton did not converge after {} iterations (residuals {:?})", .0.iterations, .0.history)]
    NoConvergence(NewtonReport),
}

/// The primal FSI system on one discretization, ready for Newton.
pub struct FsiSystem<'a> {
    pub problem: FsiProblem<'a>,
    pub disc: &'a Discretization,
}

impl NonlinearProblem for FsiSystem<'_> {
    fn residual(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        assemble_residual(&self.problem, &self.disc.space, x, self.disc)
    }

    fn solve_linearized(&self, x: &[f64], _r: &[f64]) -> Result<Vec<f64>, ModelError> {
        let (jac, r) = assemble_jacobian(&self.problem, &self.disc.space, x, self.disc)?;
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let mut dx = direct_solve(&jac, &rhs)?;
        self.disc.homogeneous.distribute(&mut dx);
        Ok(dx)
    }

    fn apply_constraints(&self, x: &mut [f64]) {
        self.disc.constraints.distribute(x);
    }
}

/// Boundary ids of the channel benchmarks.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundaryIds {
    pub inflow: u32,
    pub outflow: u32,
    pub wall: u32,
    pub cylinder: Vec<u32>,
}

impl Default for BoundaryIds {
    fn default() -> Self {
        BoundaryIds {
            inflow: 0,
            outflow: 1,
            wall: 2,
            cylinder: vec![80, 81],
        }
    }
}

/// Parabolic inflow with mean velocity `mean` in a channel of height `height`.
pub fn parabolic_inflow(mean: f64, height: f64) -> impl Fn([f64; 2]) -> f64 + Send + Sync + Clone + 'static {
    move |p: [f64; 2]| 1.5 * mean * 4.0 * p[1] * (height - p[1]) / (height * height)
}

/// Dirichlet data of the channel problems: inflow profile on the inflow,
/// no-slip on walls and cylinder, zero displacement on every outer boundary.
/// Walls are listed after the inflow so they win at shared corners.
pub fn channel_dirichlet(ids: &BoundaryIds, mean: f64, height: f64) -> Vec<DirichletBc> {
    use crate::fem::Component::*;
    let mut bcs = vec![
        DirichletBc::new(ids.inflow, Vx, parabolic_inflow(mean, height)),
        DirichletBc::zero(ids.inflow, Vy),
    ];
    for &id in std::iter::once(&ids.wall).chain(&ids.cylinder) {
        bcs.push(DirichletBc::zero(id, Vx));
        bcs.push(DirichletBc::zero(id, Vy));
    }
    for &id in [ids.inflow, ids.outflow, ids.wall].iter().chain(&ids.cylinder) {
        bcs.push(DirichletBc::zero(id, Ux));
        bcs.push(DirichletBc::zero(id, Uy));
    }
    bcs
}
