//! Multifrontal sparse LU.
//!
//! The ordering is a nested dissection by level-set separators on the graph
//! of supervariables (dofs with identical closed neighbourhoods). Each front
//! is factored densely with threshold partial pivoting restricted to its
//! fully summed rows; columns without an acceptable pivot are delayed to the
//! parent front.

use std::collections::HashMap;

use faer::linalg::matmul::matmul;
use faer::linalg::triangular_solve::solve_unit_lower_triangular_in_place;
use faer::{Accum, MatMut, MatRef, Par};

use super::{LinalgError, SparseMatrix};

/// Subgraphs at most this heavy (in dofs) become leaf fronts.
const LEAF_WEIGHT: usize = 96;
/// A pivot must be at least this fraction of the largest entry in its column.
const PIVOT_THRESHOLD: f64 = 0.1;
const NONE: u32 = u32::MAX;

/// Elimination tree in postorder, in terms of supervariables.
struct Tree {
    vars: Vec<Vec<u32>>,
    children: Vec<Vec<usize>>,
}

struct Dissection<'a> {
    adj_ptr: &'a [usize],
    adj: &'a [u32],
    weight: &'a [u32],
    stamp: Vec<u32>,
    level: Vec<u32>,
    generation: u32,
    tree: Tree,
}

impl Dissection<'_> {
    fn neighbors(&self, s: u32) -> &[u32] {
        &self.adj[self.adj_ptr[s as usize]..self.adj_ptr[s as usize + 1]]
    }

    fn next_generation(&mut self, nodes: &[u32]) -> u32 {
        self.generation += 1;
        let g = self.generation;
        for &s in nodes {
            self.stamp[s as usize] = g;
        }
        g
    }

    /// Breadth-first level structure from `root` inside the current set.
    fn levels(&mut self, root: u32, inside: u32) -> Vec<Vec<u32>> {
        self.generation += 1;
        let seen = self.generation;
        let mut levels = vec![vec![root]];
        self.level[root as usize] = seen;
        loop {
            let mut next = Vec::new();
            for &s in levels.last().unwrap() {
                for k in self.adj_ptr[s as usize]..self.adj_ptr[s as usize + 1] {
                    let t = self.adj[k];
                    if self.stamp[t as usize] == inside && self.level[t as usize] != seen {
                        self.level[t as usize] = seen;
                        next.push(t);
                    }
                }
            }
            if next.is_empty() {
                return levels;
            }
            levels.push(next);
        }
    }

    fn push_front(&mut self, vars: Vec<u32>, children: Vec<usize>) -> usize {
        self.tree.vars.push(vars);
        self.tree.children.push(children);
        self.tree.vars.len() - 1
    }

    /// Appends the fronts of `nodes` in postorder, returning the roots.
    fn dissect(&mut self, nodes: Vec<u32>) -> Vec<usize> {
        let total: usize = nodes.iter().map(|&s| self.weight[s as usize] as usize).sum();
        if total <= LEAF_WEIGHT || nodes.len() <= 2 {
            return vec![self.push_front(nodes, Vec::new())];
        }
        let inside = self.next_generation(&nodes);
        let mut levels = self.levels(nodes[0], inside);
        let reached: usize = levels.iter().map(Vec::len).sum();
        if reached < nodes.len() {
            // disconnected: dissect each component on its own
            let seen = self.generation;
            let mut comps = vec![levels.concat()];
            let mut rest: Vec<u32> = nodes.iter().copied().filter(|&s| self.level[s as usize] != seen).collect();
            while !rest.is_empty() {
                let g = self.next_generation(&rest);
                let c = self.levels(rest[0], g).concat();
                let seen = self.generation;
                rest.retain(|&s| self.level[s as usize] != seen);
                comps.push(c);
            }
            return comps.into_iter().flat_map(|c| self.dissect(c)).collect();
        }
        // pseudo-peripheral root
        for _ in 0..4 {
            let last = levels.last().unwrap();
            let &far = last.iter().min_by_key(|&&s| self.neighbors(s).len()).unwrap();
            let candidate = self.levels(far, inside);
            if candidate.len() <= levels.len() {
                break;
            }
            levels = candidate;
        }
        if levels.len() < 3 {
            return vec![self.push_front(nodes, Vec::new())];
        }
        let mut before = 0usize;
        let mut m = 1;
        for (i, l) in levels.iter().enumerate() {
            let w: usize = l.iter().map(|&s| self.weight[s as usize] as usize).sum();
            if 2 * (before + w / 2) >= total {
                m = i;
                break;
            }
            before += w;
        }
        let m = m.clamp(1, levels.len() - 2);
        // separator nodes without a neighbour beyond the separator move to the first part
        let next = self.next_generation(&levels[m + 1]);
        let mut part_a: Vec<u32> = levels[..m].concat();
        let mut sep = Vec::new();
        for &s in &levels[m] {
            if self.neighbors(s).iter().any(|&t| self.stamp[t as usize] == next) {
                sep.push(s);
            } else {
                part_a.push(s);
            }
        }
        let part_b: Vec<u32> = levels[m + 1..].concat();
        let mut children = self.dissect(part_a);
        children.extend(self.dissect(part_b));
        vec![self.push_front(sep, children)]
    }
}

/// Symbolic analysis: fronts in postorder with their own and boundary dofs.
struct Symbolic {
    vars: Vec<Vec<u32>>,
    boundary: Vec<Vec<u32>>,
    children: Vec<Vec<usize>>,
    parent: Vec<Option<usize>>,
    /// Front owning each dof.
    owner: Vec<u32>,
}

fn mix(x: u32) -> u64 {
    let mut z = (x as u64).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn analyse(a: &SparseMatrix) -> Symbolic {
    let n = a.n_rows();
    let pat = a.pattern();
    let off_diag = |i: usize| pat.row(i).iter().copied().filter(move |&j| j as usize != i);

    // supervariables: dofs with equal closed neighbourhoods
    let mut group = vec![NONE; n];
    let mut members: Vec<Vec<u32>> = Vec::new();
    let mut isolated = Vec::new();
    let mut buckets: HashMap<u64, Vec<u32>> = HashMap::new();
    let closed = |i: usize| {
        let mut v: Vec<u32> = pat.row(i).to_vec();
        if v.binary_search(&(i as u32)).is_err() {
            v.push(i as u32);
            v.sort_unstable();
        }
        v
    };
    for i in 0..n {
        if off_diag(i).next().is_none() {
            isolated.push(i as u32);
            continue;
        }
        let h = off_diag(i).chain(std::iter::once(i as u32)).fold(0u64, |h, j| h.wrapping_add(mix(j)));
        let list = buckets.entry(h).or_default();
        let ci = closed(i);
        let found = list.iter().copied().find(|&g| closed(members[g as usize][0] as usize) == ci);
        match found {
            Some(g) => {
                group[i] = g;
                members[g as usize].push(i as u32);
            }
            None => {
                let g = members.len() as u32;
                group[i] = g;
                members.push(vec![i as u32]);
                list.push(g);
            }
        }
    }
    drop(buckets);
    let ns = members.len();
    let mut adj_ptr = vec![0usize; ns + 1];
    let mut adj = Vec::new();
    let mut mark = vec![NONE; ns];
    for (s, m) in members.iter().enumerate() {
        mark[s] = s as u32;
        for j in off_diag(m[0] as usize) {
            let t = group[j as usize];
            if mark[t as usize] != s as u32 {
                mark[t as usize] = s as u32;
                adj.push(t);
            }
        }
        adj_ptr[s + 1] = adj.len();
    }
    let weight: Vec<u32> = members.iter().map(|m| m.len() as u32).collect();

    let mut d = Dissection {
        adj_ptr: &adj_ptr,
        adj: &adj,
        weight: &weight,
        stamp: vec![0; ns],
        level: vec![0; ns],
        generation: 0,
        tree: Tree {
            vars: Vec::new(),
            children: Vec::new(),
        },
    };
    if ns > 0 {
        d.dissect((0..ns as u32).collect());
    }
    let Tree { vars: svars, mut children } = d.tree;

    // subtree ranges in postorder
    let nf = svars.len();
    let mut start = vec![0usize; nf];
    let mut parent = vec![None; nf];
    for f in 0..nf {
        start[f] = children[f].iter().map(|&c| start[c]).min().unwrap_or(f);
        for &c in &children[f] {
            parent[c] = Some(f);
        }
    }
    let mut sowner = vec![0u32; ns];
    for (f, v) in svars.iter().enumerate() {
        for &s in v {
            sowner[s as usize] = f as u32;
        }
    }
    let mut sboundary: Vec<Vec<u32>> = vec![Vec::new(); nf];
    let mut seen = vec![NONE; ns];
    for f in 0..nf {
        let mut b = Vec::new();
        let inside = |t: u32| (start[f]..=f).contains(&(sowner[t as usize] as usize));
        for &s in &svars[f] {
            for &t in &adj[adj_ptr[s as usize]..adj_ptr[s as usize + 1]] {
                if !inside(t) && seen[t as usize] != f as u32 {
                    seen[t as usize] = f as u32;
                    b.push(t);
                }
            }
        }
        for &c in &children[f] {
            for &t in &sboundary[c] {
                if !inside(t) && seen[t as usize] != f as u32 {
                    seen[t as usize] = f as u32;
                    b.push(t);
                }
            }
        }
        sboundary[f] = b;
    }

    let expand = |list: &[u32]| -> Vec<u32> { list.iter().flat_map(|&s| members[s as usize].iter().copied()).collect() };
    let mut vars: Vec<Vec<u32>> = svars.iter().map(|v| expand(v)).collect();
    let mut boundary: Vec<Vec<u32>> = sboundary.iter().map(|b| expand(b)).collect();
    // decoupled dofs, in small independent fronts
    for chunk in isolated.chunks(32) {
        vars.push(chunk.to_vec());
        boundary.push(Vec::new());
        children.push(Vec::new());
        parent.push(None);
    }
    let mut owner = vec![0u32; n];
    for (f, v) in vars.iter().enumerate() {
        for &i in v {
            owner[i as usize] = f as u32;
        }
    }
    Symbolic {
        vars,
        boundary,
        children,
        parent,
        owner,
    }
}

/// Factors of one front. Rows and columns are listed pivots first; `l` is
/// `rows.len() x npiv` with a unit diagonal, `u` is `npiv x cols.len()`,
/// both column-major.
struct FrontFactor {
    rows: Vec<u32>,
    cols: Vec<u32>,
    npiv: usize,
    l: Vec<f64>,
    u: Vec<f64>,
}

/// Update passed to the parent; the first `delayed` rows and columns are
/// unpivoted fully summed variables.
struct Contribution {
    rows: Vec<u32>,
    cols: Vec<u32>,
    delayed: usize,
    values: Vec<f64>,
}

pub(crate) struct Multifrontal {
    n: usize,
    fronts: Vec<FrontFactor>,
    /// The factors are those of `diag(row_scale) A diag(col_scale)`.
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
}

/// Row then column scaling to unit max-norm.
fn equilibrate(a: &SparseMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = a.n_rows();
    let r: Vec<f64> = (0..n)
        .map(|i| {
            let m = a.row(i).fold(0.0f64, |m, (_, v)| m.max(v.abs()));
            if m > 0.0 { 1.0 / m } else { 1.0 }
        })
        .collect();
    let mut cmax = vec![0.0f64; n];
    for i in 0..n {
        for (j, v) in a.row(i) {
            cmax[j] = cmax[j].max((v * r[i]).abs());
        }
    }
    let c = cmax.iter().map(|&m| if m > 0.0 { 1.0 / m } else { 1.0 }).collect();
    (r, c)
}

impl Multifrontal {
    /// Requires a structurally symmetric pattern.
    pub fn factor(a: &SparseMatrix) -> Result<Self, LinalgError> {
        let n = a.n_rows();
        let sym = analyse(a);
        let nf = sym.vars.len();
        let mut pos_r = vec![NONE; n];
        let mut pos_c = vec![NONE; n];
        let mut pending: Vec<Option<Contribution>> = (0..nf).map(|_| None).collect();
        let mut fronts = Vec::with_capacity(nf);
        let (rs, cs) = equilibrate(a);

        for f in 0..nf {
            let kids: Vec<Contribution> = sym.children[f].iter().map(|&c| pending[c].take().expect("child factored")).collect();
            let mut fs_rows = sym.vars[f].clone();
            let mut fs_cols = sym.vars[f].clone();
            for k in &kids {
                fs_rows.extend_from_slice(&k.rows[..k.delayed]);
                fs_cols.extend_from_slice(&k.cols[..k.delayed]);
            }
            let nfs = fs_rows.len();
            let mut rows = fs_rows;
            rows.extend_from_slice(&sym.boundary[f]);
            let mut cols = fs_cols;
            cols.extend_from_slice(&sym.boundary[f]);
            let (m, k) = (rows.len(), cols.len());
            for (i, &r) in rows.iter().enumerate() {
                pos_r[r as usize] = i as u32;
            }
            for (j, &c) in cols.iter().enumerate() {
                pos_c[c as usize] = j as u32;
            }

            let mut fm = vec![0.0; m * k];
            let at = |i: u32, j: u32| i as usize + j as usize * m;
            for &v in &sym.vars[f] {
                for (j, val) in a.row(v as usize) {
                    let oj = sym.owner[j] as usize;
                    if oj >= f {
                        fm[at(pos_r[v as usize], pos_c[j])] += val * rs[v as usize] * cs[j];
                    }
                    // the column of v below the front's own block
                    if oj > f {
                        fm[at(pos_r[j], pos_c[v as usize])] += a.get(j, v as usize) * rs[j] * cs[v as usize];
                    }
                }
            }
            for kid in &kids {
                let km = kid.rows.len();
                for (b, &c) in kid.cols.iter().enumerate() {
                    let jc = pos_c[c as usize] as usize * m;
                    for (a_, &r) in kid.rows.iter().enumerate() {
                        fm[pos_r[r as usize] as usize + jc] += kid.values[a_ + b * km];
                    }
                }
            }
            drop(kids);

            // partial factorization of the fully summed block
            let root = sym.parent[f].is_none();
            let mut live_rows: Vec<usize> = (0..m).collect();
            let mut col_done = vec![false; nfs];
            let mut piv_rows = Vec::with_capacity(nfs);
            let mut piv_cols = Vec::with_capacity(nfs);
            for pass in 0..2 {
                for j in 0..nfs {
                    if col_done[j] {
                        continue;
                    }
                    let col = &fm[j * m..(j + 1) * m];
                    let mut colmax = 0.0f64;
                    let mut best = (usize::MAX, 0.0f64);
                    for (li, &i) in live_rows.iter().enumerate() {
                        let v = col[i].abs();
                        colmax = colmax.max(v);
                        if i < nfs && v > best.1 {
                            best = (li, v);
                        }
                    }
                    let ok = best.0 != usize::MAX
                        && best.1 > 0.0
                        && (best.1 >= PIVOT_THRESHOLD * colmax || (root && pass == 1));
                    if !ok {
                        continue;
                    }
                    let r = live_rows.swap_remove(best.0);
                    col_done[j] = true;
                    piv_rows.push(r);
                    piv_cols.push(j);
                    let p = fm[r + j * m];
                    for &i in &live_rows {
                        fm[i + j * m] /= p;
                    }
                    for c in 0..nfs {
                        if col_done[c] {
                            continue;
                        }
                        let urc = fm[r + c * m];
                        if urc == 0.0 {
                            continue;
                        }
                        for &i in &live_rows {
                            fm[i + c * m] -= fm[i + j * m] * urc;
                        }
                    }
                }
            }
            let np = piv_rows.len();
            if root && np < nfs {
                return Err(LinalgError::Factorization(format!("matrix is singular ({} of {} pivots missing in a root front)", nfs - np, nfs)));
            }
            let rest_fs_rows: Vec<usize> = {
                let mut v: Vec<usize> = live_rows.iter().copied().filter(|&i| i < nfs).collect();
                v.sort_unstable();
                v
            };
            let rest_fs_cols: Vec<usize> = (0..nfs).filter(|&j| !col_done[j]).collect();
            let nd = rest_fs_rows.len();
            debug_assert_eq!(nd, rest_fs_cols.len());
            let rorder: Vec<usize> = piv_rows.iter().copied().chain(rest_fs_rows.iter().copied()).chain(nfs..m).collect();
            let corder: Vec<usize> = piv_cols.iter().copied().chain(rest_fs_cols.iter().copied()).chain(nfs..k).collect();
            let nb = k - nfs;
            let mr = m - np;

            let mut l = vec![0.0; m * np];
            for t in 0..np {
                let src = piv_cols[t] * m;
                l[t + t * m] = 1.0;
                for a_ in t + 1..m {
                    l[a_ + t * m] = fm[rorder[a_] + src];
                }
            }
            let mut u = vec![0.0; np * k];
            for (b, &c) in corder.iter().enumerate().take(np + nd) {
                let top = if b < np { b + 1 } else { np };
                for s in 0..top {
                    u[s + b * np] = fm[piv_rows[s] + c * m];
                }
            }
            // U12 on the boundary columns
            for b in 0..nb {
                let c = nfs + b;
                for s in 0..np {
                    u[s + (np + nd + b) * np] = fm[piv_rows[s] + c * m];
                }
            }
            if np > 0 && nb > 0 {
                let l11 = MatRef::from_column_major_slice_with_stride(&l, np, np, m);
                let u12 = MatMut::from_column_major_slice_mut(&mut u[(np + nd) * np..], np, nb);
                solve_unit_lower_triangular_in_place(l11, u12, Par::Seq);
            }
            // Schur complement
            let mut values = vec![0.0; mr * (k - np)];
            for (b, &c) in corder[np..].iter().enumerate() {
                for (a_, &r) in rorder[np..].iter().enumerate() {
                    values[a_ + b * mr] = fm[r + c * m];
                }
            }
            drop(fm);
            if np > 0 && nb > 0 && mr > 0 {
                let l21 = MatRef::from_column_major_slice_with_stride(&l[np..], mr, np, m);
                let u12 = MatRef::from_column_major_slice(&u[(np + nd) * np..], np, nb);
                let dst = MatMut::from_column_major_slice_mut(&mut values[nd * mr..], mr, nb);
                matmul(dst, Accum::Add, l21, u12, -1.0, Par::Seq);
            }

            let grows: Vec<u32> = rorder.iter().map(|&i| rows[i]).collect();
            let gcols: Vec<u32> = corder.iter().map(|&j| cols[j]).collect();
            for &r in &rows {
                pos_r[r as usize] = NONE;
            }
            for &c in &cols {
                pos_c[c as usize] = NONE;
            }
            if !root {
                pending[f] = Some(Contribution {
                    rows: grows[np..].to_vec(),
                    cols: gcols[np..].to_vec(),
                    delayed: nd,
                    values,
                });
            }
            fronts.push(FrontFactor {
                rows: grows,
                cols: gcols,
                npiv: np,
                l,
                u,
            });
        }
        Ok(Multifrontal {
            n,
            fronts,
            row_scale: rs,
            col_scale: cs,
        })
    }

    /// Number of stored factor entries.
    pub fn factor_size(&self) -> usize {
        self.fronts.iter().map(|f| f.l.len() + f.u.len()).sum()
    }

    /// Overwrites `x = b` with the solution of `A x = b`.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        let mut y: Vec<f64> = x.iter().zip(&self.row_scale).map(|(b, r)| b * r).collect();
        let mut t = Vec::new();
        for f in &self.fronts {
            let (m, np) = (f.rows.len(), f.npiv);
            t.clear();
            t.extend(f.rows[..np].iter().map(|&r| y[r as usize]));
            for c in 0..np {
                let tc = t[c];
                if tc == 0.0 {
                    continue;
                }
                let col = &f.l[c * m..(c + 1) * m];
                for a in c + 1..np {
                    t[a] -= col[a] * tc;
                }
                for a in np..m {
                    y[f.rows[a] as usize] -= col[a] * tc;
                }
            }
            for (a, &r) in f.rows[..np].iter().enumerate() {
                y[r as usize] = t[a];
            }
        }
        for f in self.fronts.iter().rev() {
            let (k, np) = (f.cols.len(), f.npiv);
            t.clear();
            t.extend(f.rows[..np].iter().map(|&r| y[r as usize]));
            for b in np..k {
                let xb = x[f.cols[b] as usize];
                if xb == 0.0 {
                    continue;
                }
                for s in 0..np {
                    t[s] -= f.u[s + b * np] * xb;
                }
            }
            for c in (0..np).rev() {
                let v = t[c] / f.u[c + c * np];
                t[c] = v;
                for s in 0..c {
                    t[s] -= f.u[s + c * np] * v;
                }
            }
            for (a, &c) in f.cols[..np].iter().enumerate() {
                x[c as usize] = t[a];
            }
        }
        for (xi, c) in x.iter_mut().zip(&self.col_scale) {
            *xi *= c;
        }
    }

    /// Overwrites `x = b` with the solution of `A^T x = b`.
    pub fn solve_transpose_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        let mut w: Vec<f64> = x.iter().zip(&self.col_scale).map(|(b, c)| b * c).collect();
        let mut t = Vec::new();
        for f in &self.fronts {
            let (k, np) = (f.cols.len(), f.npiv);
            t.clear();
            t.extend(f.cols[..np].iter().map(|&c| w[c as usize]));
            // U11^T is lower triangular
            for c in 0..np {
                let mut v = t[c];
                for s in 0..c {
                    v -= f.u[s + c * np] * t[s];
                }
                t[c] = v / f.u[c + c * np];
            }
            for b in np..k {
                let mut v = 0.0;
                for s in 0..np {
                    v += f.u[s + b * np] * t[s];
                }
                w[f.cols[b] as usize] -= v;
            }
            for (a, &c) in f.cols[..np].iter().enumerate() {
                w[c as usize] = t[a];
            }
        }
        for f in self.fronts.iter().rev() {
            let (m, np) = (f.rows.len(), f.npiv);
            t.clear();
            t.extend(f.cols[..np].iter().map(|&c| w[c as usize]));
            for c in (0..np).rev() {
                let col = &f.l[c * m..(c + 1) * m];
                let mut v = t[c];
                for a in c + 1..np {
                    v -= col[a] * t[a];
                }
                for a in np..m {
                    v -= col[a] * x[f.rows[a] as usize];
                }
                t[c] = v;
            }
            for (a, &r) in f.rows[..np].iter().enumerate() {
                x[r as usize] = t[a];
            }
        }
        for (xi, r) in x.iter_mut().zip(&self.row_scale) {
            *xi *= r;
        }
    }
}
