//! Compressed sparse row storage and a sparse direct solver.
//!
//! Factorization is multifrontal LU (see [`multifrontal`]) followed by a few
//! steps of iterative refinement.

use std::sync::Arc;

use thiserror::Error;

mod multifrontal;

use multifrontal::Multifrontal;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("relative residual {0:.3e} above tolerance after refinement")]
    Residual(f64),
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
}

/// Row-compressed index structure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparsityPattern {
    n: usize,
    row_ptr: Vec<u32>,
    cols: Vec<u32>,
}

impl SparsityPattern {
    /// Builds from sorted, duplicate-free column lists.
    pub fn from_rows(rows: Vec<Vec<u32>>) -> Self {
        let n = rows.len();
        let nnz: usize = rows.iter().map(Vec::len).sum();
        assert!(nnz < u32::MAX as usize, "pattern too large for 32-bit indices");
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for r in rows {
            debug_assert!(r.windows(2).all(|w| w[0] < w[1]));
            cols.extend_from_slice(&r);
            row_ptr.push(cols.len() as u32);
        }
        SparsityPattern { n, row_ptr, cols }
    }

    /// Pattern of a dense `n x n` block, mainly for tests.
    pub fn dense(n: usize) -> Self {
        Self::from_rows((0..n).map(|_| (0..n as u32).collect()).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.cols[self.row_ptr[i] as usize..self.row_ptr[i + 1] as usize]
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_ptr[i] as usize;
        self.row(i).binary_search(&(j as u32)).ok().map(|k| start + k)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).iter().all(|&j| self.index(j as usize, i).is_some()))
    }
}

/// Square sparse matrix over a shared pattern.
#[derive(Clone, Debug)]
pub struct SparseMatrix {
    pattern: Arc<SparsityPattern>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn new(pattern: Arc<SparsityPattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        SparseMatrix { pattern, values }
    }

    pub fn from_dense(a: &[f64], n: usize) -> Self {
        let rows = (0..n)
            .map(|i| (0..n as u32).filter(|&j| a[i * n + j as usize] != 0.0 || i == j as usize).collect())
            .collect();
        let mut m = SparseMatrix::new(Arc::new(SparsityPattern::from_rows(rows)));
        for i in 0..n {
            for j in 0..n {
                if a[i * n + j] != 0.0 {
                    m.add(i, j, a[i * n + j]);
                }
            }
        }
        m
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn n_rows(&self) -> usize {
        self.pattern.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn clear(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Adds to an entry; panics if it is outside the pattern.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        match self.pattern.index(i, j) {
            Some(k) => self.values[k] += v,
            None => panic!("entry ({i}, {j}) missing from sparsity pattern"),
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.pattern.index(i, j).unwrap_or_else(|| panic!("entry ({i}, {j}) missing from sparsity pattern"));
        self.values[k] = v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.index(i, j).map_or(0.0, |k| self.values[k])
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let s = self.pattern.row_ptr[i] as usize;
        let e = self.pattern.row_ptr[i + 1] as usize;
        self.pattern.cols[s..e].iter().zip(&self.values[s..e]).map(|(&j, &v)| (j as usize, v))
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    pub fn matvec_transpose(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (i, &xi) in x.iter().enumerate() {
            for (j, v) in self.row(i) {
                y[j] += v * xi;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Copy over the union of the pattern and its transpose.
    pub fn symmetrized(&self) -> SparseMatrix {
        let n = self.n_rows();
        let mut rows: Vec<Vec<u32>> = (0..n).map(|i| self.pattern.row(i).to_vec()).collect();
        for i in 0..n {
            for &j in self.pattern.row(i) {
                rows[j as usize].push(i as u32);
            }
        }
        for r in &mut rows {
            r.sort_unstable();
            r.dedup();
        }
        let mut m = SparseMatrix::new(Arc::new(SparsityPattern::from_rows(rows)));
        for i in 0..n {
            for (j, v) in self.row(i) {
                m.add(i, j, v);
            }
        }
        m
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n_rows();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for (j, v) in self.row(i) {
                d[i * n + j] = v;
            }
        }
        d
    }
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Relative residual tolerance every solve must meet.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// LU factors of a sparse matrix, reusable for several right-hand sides in
/// both orientations.
pub struct Factorization<'a> {
    matrix: &'a SparseMatrix,
    lu: Multifrontal,
}

impl<'a> Factorization<'a> {
    pub fn new(matrix: &'a SparseMatrix) -> Result<Self, LinalgError> {
        if !matrix.is_finite() {
            return Err(LinalgError::NonFinite("matrix"));
        }
        let lu = if matrix.pattern.is_symmetric() {
            Multifrontal::factor(matrix)?
        } else {
            Multifrontal::factor(&matrix.symmetrized())?
        };
        Ok(Factorization { matrix, lu })
    }

    /// Number of stored entries in the factors.
    pub fn factor_size(&self) -> usize {
        self.lu.factor_size()
    }

    fn raw(&self, x: &mut [f64], transpose: bool) {
        if transpose {
            self.lu.solve_transpose_in_place(x);
        } else {
            self.lu.solve_in_place(x);
        }
    }

    fn solve_impl(&self, b: &[f64], transpose: bool) -> Result<Vec<f64>, LinalgError> {
        if b.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite("right-hand side"));
        }
        let nb = norm2(b);
        let n = b.len();
        if nb == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let mut x = b.to_vec();
        self.raw(&mut x, transpose);
        let mut r = vec![0.0; n];
        let mut rel = f64::INFINITY;
        for step in 0..4 {
            if transpose {
                self.matrix.matvec_transpose(&x, &mut r);
            } else {
                self.matrix.matvec(&x, &mut r);
            }
            for i in 0..n {
                r[i] = b[i] - r[i];
            }
            rel = norm2(&r) / nb;
            log::debug!("refinement step {step}: relative residual {rel:.3e}");
            if !rel.is_finite() {
                return Err(LinalgError::Factorization("singular matrix".into()));
            }
            if rel < 1e-3 * RESIDUAL_TOL || step == 3 {
                break;
            }
            self.raw(&mut r, transpose);
            for i in 0..n {
                x[i] += r[i];
            }
        }
        if rel >= RESIDUAL_TOL {
            return Err(LinalgError::Residual(rel));
        }
        Ok(x)
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        self.solve_impl(b, false)
    }

    pub fn solve_transpose(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        self.solve_impl(b, true)
    }
}

/// Solves `A x = b`, checking `|Ax - b| / |b| < 1e-10`.
pub fn direct_solve(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    Factorization::new(a)?.solve(b)
}

/// Solves `A^T x = b` with the same residual check.
pub fn transpose_solve(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    Factorization::new(a)?.solve_transpose(b)
}
