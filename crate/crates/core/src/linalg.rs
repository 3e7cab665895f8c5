//! Sparse storage, bandwidth-reducing ordering and a banded LU solver.
//!
//! Liouvillians of this model are very sparse (a few entries per row) and, once
//! reordered with reverse Cuthill–McKee, narrowly banded. Solving them as
//! banded systems is what makes 10⁴-point parameter maps affordable.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Compressed sparse row matrix with sorted, duplicate-free column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    /// Duplicates are summed; entries that sum to exactly zero are dropped.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(usize, usize, C64)>,
    ) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            if let (Some(&lr), Some(&lc)) = (rows.last(), cols.last()) {
                if lr == r && lc == c {
                    *vals.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            cols.push(c);
            vals.push(v);
        }
        let mut out_cols = Vec::with_capacity(cols.len());
        let mut out_vals = Vec::with_capacity(vals.len());
        for ((r, c), v) in rows.into_iter().zip(cols).zip(vals) {
            if v != ZERO {
                row_ptr[r + 1] += 1;
                out_cols.push(c);
                out_vals.push(v);
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            cols: out_cols,
            vals: out_vals,
        }
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != ZERO {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[range.clone()].binary_search(&j) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => ZERO,
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            out.extend(self.row(i).map(|(j, v)| (i, j, v)));
        }
        out
    }

    /// `y = A x`
    pub fn mul_vec_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yi = acc;
        }
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn add(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut t = self.triplets();
        t.extend(other.triplets());
        Self::from_triplets(self.nrows, self.ncols, t)
    }

    pub fn scale(&self, factor: C64) -> CsrMatrix {
        let mut out = self.clone();
        for v in &mut out.vals {
            *v *= factor;
        }
        out.dropping_zeros()
    }

    fn dropping_zeros(self) -> CsrMatrix {
        if self.vals.iter().all(|v| *v != ZERO) {
            return self;
        }
        Self::from_triplets(self.nrows, self.ncols, self.triplets())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.vals.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0_f64, |m, v| m.max(v.norm()))
    }

    /// Copy with row and column `skip` removed (square matrices only).
    pub fn without_row_col(&self, skip: usize) -> CsrMatrix {
        assert_eq!(self.nrows, self.ncols);
        let shift = |k: usize| if k > skip { k - 1 } else { k };
        let t = self
            .triplets()
            .into_iter()
            .filter(|&(i, j, _)| i != skip && j != skip)
            .map(|(i, j, v)| (shift(i), shift(j), v))
            .collect();
        Self::from_triplets(self.nrows - 1, self.ncols - 1, t)
    }

    /// Column `j` as a dense vector.
    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.nrows).map(|i| self.get(i, j)).collect()
    }
}

/// Reverse Cuthill–McKee ordering of the symmetrized sparsity pattern.
///
/// Returns `perm` with `perm[new] = old`. Deterministic: ties are broken by
/// degree, then by index.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for (j, _) in a.row(i) {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();

    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));

    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(seed, &adj, &degree);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// George–Liu search for a node of (near) maximal eccentricity.
fn pseudo_peripheral(seed: usize, adj: &[Vec<usize>], degree: &[usize]) -> usize {
    let mut root = seed;
    let mut levels = bfs_levels(root, adj);
    let mut depth = *levels.iter().flatten().max().unwrap_or(&0);
    loop {
        let candidate = levels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == Some(depth))
            .map(|(i, _)| i)
            .min_by_key(|&i| (degree[i], i))
            .unwrap_or(root);
        let cand_levels = bfs_levels(candidate, adj);
        let cand_depth = *cand_levels.iter().flatten().max().unwrap_or(&0);
        if cand_depth <= depth {
            return root;
        }
        root = candidate;
        levels = cand_levels;
        depth = cand_depth;
    }
}

fn bfs_levels(root: usize, adj: &[Vec<usize>]) -> Vec<Option<usize>> {
    let mut level = vec![None; adj.len()];
    level[root] = Some(0);
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        let lv = level[v].unwrap();
        for &w in &adj[v] {
            if level[w].is_none() {
                level[w] = Some(lv + 1);
                queue.push_back(w);
            }
        }
    }
    level
}

/// Lower and upper bandwidth of `a` after the symmetric permutation `perm`.
pub fn bandwidths(a: &CsrMatrix, perm: &[usize]) -> (usize, usize) {
    let mut inv = vec![0usize; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let (mut kl, mut ku) = (0usize, 0usize);
    for i in 0..a.nrows() {
        for (j, _) in a.row(i) {
            let (pi, pj) = (inv[i], inv[j]);
            if pi > pj {
                kl = kl.max(pi - pj);
            } else {
                ku = ku.max(pj - pi);
            }
        }
    }
    (kl, ku)
}

/// LU factorization with partial pivoting of a banded matrix, stored in the
/// LAPACK `gbtrf` column-major layout with `kl` extra rows for pivot fill.
#[derive(Clone, Debug)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<C64>,
    piv: Vec<usize>,
    min_pivot: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingularPivot {
    pub column: usize,
}

impl BandedLu {
    /// Factorizes `P A Pᵀ` where `perm[new] = old`.
    pub fn factor(a: &CsrMatrix, perm: &[usize]) -> Result<Self, SingularPivot> {
        let n = a.nrows();
        assert_eq!(n, a.ncols());
        assert_eq!(perm.len(), n);
        let (kl, ku) = bandwidths(a, perm);
        let ldab = 2 * kl + ku + 1;
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut lu = Self {
            n,
            kl,
            ku,
            ldab,
            ab: vec![ZERO; ldab * n],
            piv: vec![0; n],
            min_pivot: f64::INFINITY,
        };
        for i in 0..n {
            for (j, v) in a.row(i) {
                let k = lu.idx(inv[i], inv[j]);
                lu.ab[k] = v;
            }
        }
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        lu.eliminate(scale)?;
        Ok(lu)
    }

    #[inline(always)]
    fn idx(&self, i: usize, j: usize) -> usize {
        (self.kl + self.ku + i - j) + self.ldab * j
    }

    fn eliminate(&mut self, scale: f64) -> Result<(), SingularPivot> {
        let n = self.n;
        let kl = self.kl;
        let reach = self.kl + self.ku;
        for k in 0..n {
            let km = kl.min(n - 1 - k);
            let mut p = k;
            let mut best = self.ab[self.idx(k, k)].norm();
            for i in k + 1..=k + km {
                let v = self.ab[self.idx(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            self.piv[k] = p;
            if best <= 1e-13 * scale {
                return Err(SingularPivot { column: k });
            }
            self.min_pivot = self.min_pivot.min(best);
            let last = (n - 1).min(k + reach);
            if p != k {
                for j in k..=last {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.ab.swap(a, b);
                }
            }
            let inv_pivot = C64::new(1.0, 0.0) / self.ab[self.idx(k, k)];
            let col_k = self.idx(k + 1, k);
            for v in &mut self.ab[col_k..col_k + km] {
                *v *= inv_pivot;
            }
            for j in k + 1..=last {
                let akj = self.ab[self.idx(k, j)];
                if akj == ZERO {
                    continue;
                }
                let col_j = self.idx(k + 1, j);
                for t in 0..km {
                    let l = self.ab[col_k + t];
                    self.ab[col_j + t] -= l * akj;
                }
            }
        }
        Ok(())
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    /// Solves `A x = b` in the original (unpermuted) ordering.
    pub fn solve(&self, b: &[C64], perm: &[usize]) -> Vec<C64> {
        let n = self.n;
        let mut x: Vec<C64> = perm.iter().map(|&old| b[old]).collect();
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                x.swap(k, p);
            }
            let km = self.kl.min(n - 1 - k);
            let xk = x[k];
            if xk != ZERO {
                let col = self.idx(k + 1, k);
                for t in 0..km {
                    x[k + 1 + t] -= self.ab[col + t] * xk;
                }
            }
        }
        for k in (0..n).rev() {
            let xk = x[k] / self.ab[self.idx(k, k)];
            x[k] = xk;
            let first = k.saturating_sub(self.kl + self.ku);
            for i in first..k {
                x[i] -= self.ab[self.idx(i, k)] * xk;
            }
        }
        let mut out = vec![ZERO; n];
        for (new, &old) in perm.iter().enumerate() {
            out[old] = x[new];
        }
        out
    }
}

/// Euclidean norm of a complex vector.
pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn to_dvector(v: &[C64]) -> DVector<C64> {
    DVector::from_column_slice(v)
}
