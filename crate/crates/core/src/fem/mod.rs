//! Finite element substrate: Lagrange elements, quadrature, geometry maps,
//! dof numbering, constraints and cell/face values.

pub mod constraints;
pub mod dofs;
pub mod element;
pub mod geometry;
pub mod quadrature;
pub mod values;

pub use constraints::{ConstraintLine, ConstraintSet, DirichletBc, DirichletConflict};
pub use dofs::{Component, MixedSpace, ScalarDofs};
pub use element::{Lagrange1d, NodeLocation, ScalarElement, Tabulation};
pub use geometry::{GeometryMap, MeshGeometry};
pub use quadrature::{Quadrature1d, Quadrature2d};
pub use values::{evaluate_field, CellValues, FaceValues};
