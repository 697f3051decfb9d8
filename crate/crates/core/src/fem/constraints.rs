//! Affine dof constraints: hanging nodes on 1-irregular meshes and
//! Dirichlet data, kept in flattened form.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::linalg::{SparseMatrix, SparsityPattern};
use crate::mesh::{BoundaryId, FaceNeighbor, Mesh};

use super::dofs::{Component, MixedSpace, ScalarDofs};
use super::element::Lagrange1d;

pub type ValueFn = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;

/// Strongly imposed boundary values for one component on one boundary id.
#[derive(Clone)]
pub struct DirichletBc {
    pub boundary_id: BoundaryId,
    pub component: Component,
    pub value: ValueFn,
}

impl DirichletBc {
    pub fn new(boundary_id: BoundaryId, component: Component, value: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static) -> Self {
        DirichletBc {
            boundary_id,
            component,
            value: Arc::new(value),
        }
    }

    pub fn zero(boundary_id: BoundaryId, component: Component) -> Self {
        Self::new(boundary_id, component, |_| 0.0)
    }
}

impl fmt::Debug for DirichletBc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DirichletBc")
            .field("boundary_id", &self.boundary_id)
            .field("component", &self.component)
            .finish_non_exhaustive()
    }
}

/// `x[dof] = sum_m w_m x[m] + inhomogeneity`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintLine {
    pub entries: Vec<(usize, f64)>,
    pub inhomogeneity: f64,
}

/// Two Dirichlet conditions prescribing different values at one dof. The
/// condition listed later wins.
#[derive(Clone, Debug, PartialEq)]
pub struct DirichletConflict {
    pub dof: usize,
    pub kept: (BoundaryId, f64),
    pub dropped: (BoundaryId, f64),
}

#[derive(Clone, Debug, Default)]
pub struct ConstraintSet {
    lines: Vec<Option<ConstraintLine>>,
    conflicts: Vec<DirichletConflict>,
}

const DROP_WEIGHT: f64 = 1e-14;

/// Hanging-node constraints of a scalar space as `(dof, masters)` lines.
///
/// On a face with a finer neighbor the fine-side nodes take the value of the
/// coarse face polynomial, so the weights are the coarse 1D basis evaluated
/// at the fine nodes' face parameters.
pub fn hanging_lines(mesh: &Mesh, dofs: &ScalarDofs) -> Vec<(usize, Vec<(usize, f64)>)> {
    let k = dofs.degree();
    let basis = Lagrange1d::new(k);
    let mut out = Vec::new();
    for &c in mesh.active_cells() {
        for f in 0..4 {
            if !matches!(mesh.neighbor(c, f), FaceNeighbor::Finer { .. }) {
                continue;
            }
            let (a, b) = mesh.cell(c).face_vertices(f);
            let m = mesh.edge_midpoint(a, b).expect("refined face without midpoint");
            let coarse = dofs.segment_dofs(a, b).expect("coarse face dofs");
            let first = dofs.segment_dofs(a, m).expect("fine face dofs");
            let second = dofs.segment_dofs(m, b).expect("fine face dofs");
            let kf = k as f64;
            let mut fine: Vec<(usize, f64)> = (1..k).map(|j| (first[j], j as f64 / (2.0 * kf))).collect();
            fine.push((first[k], 0.5));
            fine.extend((1..k).map(|j| (second[j], 0.5 + j as f64 / (2.0 * kf))));
            for (dof, s) in fine {
                let entries = (0..=k)
                    .map(|i| (coarse[i], basis.value(i, s)))
                    .filter(|&(_, w)| w.abs() > DROP_WEIGHT)
                    .collect();
                out.push((dof, entries));
            }
        }
    }
    out
}

impl ConstraintSet {
    pub fn new(n_dofs: usize) -> Self {
        ConstraintSet {
            lines: vec![None; n_dofs],
            conflicts: Vec::new(),
        }
    }

    /// Hanging-node constraints of a scalar space, flattened.
    pub fn hanging(mesh: &Mesh, dofs: &ScalarDofs) -> Self {
        let mut cs = ConstraintSet::new(dofs.n_dofs());
        for (dof, entries) in hanging_lines(mesh, dofs) {
            cs.set_line(dof, entries, 0.0);
        }
        cs.close();
        cs
    }

    /// Hanging constraints for every component plus Dirichlet data. A dof
    /// that is both hanging and Dirichlet keeps the Dirichlet value.
    pub fn build(mesh: &Mesh, space: &MixedSpace, bcs: &[DirichletBc]) -> Self {
        let mut cs = ConstraintSet::new(space.n_dofs());
        let vel = hanging_lines(mesh, &space.velocity);
        let pre = hanging_lines(mesh, &space.pressure);
        for comp in Component::ALL {
            let o = space.offset(comp);
            let lines = if comp == Component::P { &pre } else { &vel };
            for (dof, entries) in lines {
                cs.set_line(dof + o, entries.iter().map(|&(m, w)| (m + o, w)).collect(), 0.0);
            }
        }

        let faces = mesh.boundary_faces();
        let mut values: BTreeMap<usize, (BoundaryId, f64)> = BTreeMap::new();
        let mut conflicts = Vec::new();
        for bc in bcs {
            let scalar = space.scalar(bc.component);
            let o = space.offset(bc.component);
            for &(c, f, id) in &faces {
                if id != bc.boundary_id {
                    continue;
                }
                let (a, b) = mesh.cell(c).face_vertices(f);
                for d in scalar.segment_dofs(a, b).expect("boundary face dofs") {
                    let val = (bc.value)(scalar.support_points()[d]);
                    if let Some(&(old_id, old)) = values.get(&(d + o)) {
                        if old_id != id && (old - val).abs() > 1e-12 * old.abs().max(val.abs()).max(1.0) {
                            conflicts.push(DirichletConflict {
                                dof: d + o,
                                kept: (id, val),
                                dropped: (old_id, old),
                            });
                        }
                    }
                    values.insert(d + o, (id, val));
                }
            }
        }
        for (&dof, &(_, val)) in &values {
            cs.set_line(dof, Vec::new(), val);
        }
        cs.conflicts = conflicts;
        cs.close();
        cs
    }

    pub fn n_dofs(&self) -> usize {
        self.lines.len()
    }

    pub fn n_constrained(&self) -> usize {
        self.lines.iter().filter(|l| l.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.iter().all(Option::is_none)
    }

    pub fn conflicts(&self) -> &[DirichletConflict] {
        &self.conflicts
    }

    pub fn set_line(&mut self, dof: usize, entries: Vec<(usize, f64)>, inhomogeneity: f64) {
        self.lines[dof] = Some(ConstraintLine { entries, inhomogeneity });
    }

    pub fn is_constrained(&self, dof: usize) -> bool {
        self.lines[dof].is_some()
    }

    pub fn line(&self, dof: usize) -> Option<&ConstraintLine> {
        self.lines[dof].as_ref()
    }

    pub fn lines(&self) -> impl Iterator<Item = (usize, &ConstraintLine)> {
        self.lines.iter().enumerate().filter_map(|(i, l)| l.as_ref().map(|l| (i, l)))
    }

    /// Resolves chains so that no master is itself constrained.
    pub fn close(&mut self) {
        let n = self.lines.len();
        let mut done = vec![false; n];
        for i in 0..n {
            self.resolve(i, &mut done, 0);
        }
    }

    fn resolve(&mut self, i: usize, done: &mut [bool], depth: usize) {
        if done[i] {
            return;
        }
        assert!(depth < 64, "cyclic constraints at dof {i}");
        let Some(line) = self.lines[i].clone() else {
            done[i] = true;
            return;
        };
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        let mut inhom = line.inhomogeneity;
        for &(m, w) in &line.entries {
            if self.lines[m].is_some() {
                self.resolve(m, done, depth + 1);
                let sub = self.lines[m].as_ref().unwrap();
                inhom += w * sub.inhomogeneity;
                for &(mm, ww) in &sub.entries {
                    *acc.entry(mm).or_insert(0.0) += w * ww;
                }
            } else {
                *acc.entry(m).or_insert(0.0) += w;
            }
        }
        let entries = acc.into_iter().filter(|&(_, w)| w.abs() > DROP_WEIGHT).collect();
        self.lines[i] = Some(ConstraintLine {
            entries,
            inhomogeneity: inhom,
        });
        done[i] = true;
    }

    /// Same constraints with all inhomogeneities set to zero.
    pub fn homogenized(&self) -> Self {
        let mut out = self.clone();
        for l in out.lines.iter_mut().flatten() {
            l.inhomogeneity = 0.0;
        }
        out
    }

    /// Overwrites constrained entries of `x` from its masters.
    pub fn distribute(&self, x: &mut [f64]) {
        for (i, l) in self.lines() {
            x[i] = l.inhomogeneity + l.entries.iter().map(|&(m, w)| w * x[m]).sum::<f64>();
        }
    }

    pub fn set_zero(&self, x: &mut [f64]) {
        for (i, _) in self.lines() {
            x[i] = 0.0;
        }
    }

    /// Masters and weights a dof expands to; an unconstrained dof maps to itself.
    pub fn expand(&self, dof: usize, out: &mut Vec<(usize, f64)>) {
        out.clear();
        match &self.lines[dof] {
            Some(l) => out.extend_from_slice(&l.entries),
            None => out.push((dof, 1.0)),
        }
    }

    /// Pattern containing the constraint-expanded couplings of every cell
    /// plus the diagonal.
    pub fn sparsity_pattern<'a>(&self, cells: impl Iterator<Item = &'a [usize]>) -> SparsityPattern {
        let n = self.n_dofs();
        let mut rows: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut expanded: Vec<u32> = Vec::new();
        for dofs in cells {
            expanded.clear();
            for &d in dofs {
                match &self.lines[d] {
                    Some(l) => expanded.extend(l.entries.iter().map(|&(m, _)| m as u32)),
                    None => expanded.push(d as u32),
                }
            }
            expanded.sort_unstable();
            expanded.dedup();
            for &r in &expanded {
                let row = &mut rows[r as usize];
                row.extend_from_slice(&expanded);
                // keep the scratch rows compact on big meshes
                if row.len() > 4 * expanded.len() + 256 {
                    row.sort_unstable();
                    row.dedup();
                }
            }
        }
        for (i, row) in rows.iter_mut().enumerate() {
            row.push(i as u32);
            row.sort_unstable();
            row.dedup();
        }
        SparsityPattern::from_rows(rows)
    }

    /// Adds a cell matrix and vector into the global system, eliminating
    /// constrained dofs. Rows for which `skip_row` returns true receive no
    /// contribution. With `inhomogeneous` set, couplings to prescribed values
    /// move to the right-hand side.
    #[allow(clippy::too_many_arguments)]
    pub fn distribute_local(
        &self,
        dofs: &[usize],
        cell_matrix: Option<&[f64]>,
        cell_vector: Option<&[f64]>,
        matrix: Option<&mut SparseMatrix>,
        rhs: Option<&mut [f64]>,
        inhomogeneous: bool,
        skip_row: &dyn Fn(usize) -> bool,
    ) {
        let n = dofs.len();
        let exp: Vec<Vec<(usize, f64)>> = dofs
            .iter()
            .map(|&d| {
                let mut v = Vec::new();
                self.expand(d, &mut v);
                v.retain(|&(m, _)| !skip_row(m));
                v
            })
            .collect();
        // column expansion ignores the row mask
        let cols: Vec<Vec<(usize, f64)>> = dofs
            .iter()
            .map(|&d| {
                let mut v = Vec::new();
                self.expand(d, &mut v);
                v
            })
            .collect();
        let mut rhs = rhs;
        if let (Some(ke), Some(a)) = (cell_matrix, matrix) {
            for i in 0..n {
                if exp[i].is_empty() {
                    continue;
                }
                for j in 0..n {
                    let kij = ke[i * n + j];
                    if kij == 0.0 {
                        continue;
                    }
                    for &(mi, wi) in &exp[i] {
                        for &(mj, wj) in &cols[j] {
                            a.add(mi, mj, wi * wj * kij);
                        }
                    }
                    if inhomogeneous {
                        if let (Some(l), Some(b)) = (&self.lines[dofs[j]], rhs.as_deref_mut()) {
                            if l.inhomogeneity != 0.0 {
                                for &(mi, wi) in &exp[i] {
                                    b[mi] -= wi * kij * l.inhomogeneity;
                                }
                            }
                        }
                    }
                }
            }
        }
        if let (Some(fe), Some(b)) = (cell_vector, rhs) {
            for i in 0..n {
                for &(mi, wi) in &exp[i] {
                    b[mi] += wi * fe[i];
                }
            }
        }
    }

    /// Puts a nonzero diagonal on constrained rows. With `inhomogeneous`
    /// set, pure Dirichlet rows get `diag * value` on the right-hand side,
    /// otherwise zero. Call [`Self::distribute`] on the solution afterwards.
    pub fn finalize(&self, matrix: Option<&mut SparseMatrix>, rhs: Option<&mut [f64]>, inhomogeneous: bool) {
        let mut scale = 1.0;
        if let Some(a) = matrix {
            let mut sum = 0.0;
            let mut count = 0usize;
            for i in 0..a.n_rows() {
                if self.lines[i].is_none() {
                    let d = a.get(i, i).abs();
                    if d > 0.0 {
                        sum += d;
                        count += 1;
                    }
                }
            }
            if count > 0 {
                scale = sum / count as f64;
            }
            for (i, _) in self.lines() {
                a.set(i, i, scale);
            }
        }
        if let Some(b) = rhs {
            for (i, l) in self.lines() {
                b[i] = if inhomogeneous && l.entries.is_empty() {
                    scale * l.inhomogeneity
                } else {
                    0.0
                };
            }
        }
    }
}
