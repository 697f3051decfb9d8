//! Adaptive finite elements for stationary fluid-structure interaction in
//! monolithic ALE form, with goal-oriented error control by a
//! partition-of-unity dual weighted residual estimator.

// index loops read closer to the formulas in the numerical kernels
#![allow(clippy::needless_range_loop)]

pub mod driver;
pub mod dwr;
pub mod fem;
pub mod goal;
pub mod linalg;
pub mod mesh;
pub mod model;
#[cfg(test)]
mod testing;

pub use fem::{Component, ConstraintSet, DirichletBc, MeshGeometry, MixedSpace};
pub use linalg::{direct_solve, transpose_solve, LinalgError, SparseMatrix, SparsityPattern};
pub use mesh::{read_ucd, read_ucd_file, write_ucd, CircleManifold, MaterialId, Mesh, MeshError};
