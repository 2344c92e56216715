//! Sparse matrices over an exact scalar and Gaussian elimination over a field.
//!
//! Pivoting is fixed to "first structurally nonzero entry in row-major scan"
//! so that kernel and cohomology bases are reproducible across runs and
//! thread counts.

use crate::field::{Field, Scalar};
use std::collections::BTreeMap;

pub type SparseVec<T> = BTreeMap<usize, T>;

pub fn vec_add_scaled<T: Scalar>(dst: &mut SparseVec<T>, src: &SparseVec<T>, c: &T) {
    if c.is_zero() {
        return;
    }
    for (i, v) in src {
        let t = v.clone() * c.clone();
        match dst.get_mut(i) {
            Some(e) => {
                let s = e.clone() + t;
                if s.is_zero() {
                    dst.remove(i);
                } else {
                    *e = s;
                }
            }
            None => {
                if !t.is_zero() {
                    dst.insert(*i, t);
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<T: Scalar> {
    pub rows: usize,
    pub cols: usize,
    entries: BTreeMap<(usize, usize), T>,
}

impl<T: Scalar> SparseMatrix<T> {
    pub fn zero(rows: usize, cols: usize) -> Self {
        SparseMatrix {
            rows,
            cols,
            entries: BTreeMap::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }

    pub fn from_triplets(rows: usize, cols: usize, mut t: Vec<(usize, usize, T)>) -> Self {
        let mut m = Self::zero(rows, cols);
        for (r, c, v) in t.drain(..) {
            m.add_to(r, c, v);
        }
        m
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        assert!(r < self.rows && c < self.cols, "index out of range");
        if v.is_zero() {
            self.entries.remove(&(r, c));
        } else {
            self.entries.insert((r, c), v);
        }
    }

    pub fn add_to(&mut self, r: usize, c: usize, v: T) {
        if v.is_zero() {
            return;
        }
        let cur = self.get(r, c);
        self.set(r, c, cur + v);
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.entries.get(&(r, c)).cloned().unwrap_or_else(T::zero)
    }

    pub fn is_zero_matrix(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &T)> {
        self.entries.iter().map(|(&(r, c), v)| (r, c, v))
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zero(self.cols, self.rows);
        for (r, c, v) in self.iter() {
            m.set(c, r, v.clone());
        }
        m
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in mul");
        let mut out = Self::zero(self.rows, rhs.cols);
        // rhs rows indexed once
        let mut rhs_rows: BTreeMap<usize, Vec<(usize, &T)>> = BTreeMap::new();
        for (r, c, v) in rhs.iter() {
            rhs_rows.entry(r).or_default().push((c, v));
        }
        for (r, k, a) in self.iter() {
            if let Some(row) = rhs_rows.get(&k) {
                for (c, b) in row {
                    out.add_to(r, *c, a.clone() * (*b).clone());
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let mut out = self.clone();
        for (r, c, v) in rhs.iter() {
            out.add_to(r, c, v.clone());
        }
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let mut out = self.clone();
        for (r, c, v) in rhs.iter() {
            out.add_to(r, c, -v.clone());
        }
        out
    }

    pub fn scale(&self, c: &T) -> Self {
        let mut out = Self::zero(self.rows, self.cols);
        for (r, col, v) in self.iter() {
            out.set(r, col, v.clone() * c.clone());
        }
        out
    }

    pub fn apply(&self, v: &SparseVec<T>) -> SparseVec<T> {
        let mut out: SparseVec<T> = SparseVec::new();
        for (r, c, a) in self.iter() {
            if let Some(x) = v.get(&c) {
                let t = a.clone() * x.clone();
                match out.get_mut(&r) {
                    Some(e) => {
                        let s = e.clone() + t;
                        if s.is_zero() {
                            out.remove(&r);
                        } else {
                            *e = s;
                        }
                    }
                    None => {
                        if !t.is_zero() {
                            out.insert(r, t);
                        }
                    }
                }
            }
        }
        out
    }

    pub fn column(&self, c: usize) -> SparseVec<T> {
        let mut out = SparseVec::new();
        for r in 0..self.rows {
            let v = self.get(r, c);
            if !v.is_zero() {
                out.insert(r, v);
            }
        }
        out
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> SparseMatrix<U> {
        let mut out = SparseMatrix::zero(self.rows, self.cols);
        for (r, c, v) in self.iter() {
            out.set(r, c, f(v));
        }
        out
    }
}

/// Row echelon data for a field matrix: reduced rows and their pivot columns.
pub struct Echelon<T: Scalar> {
    pub rows: Vec<SparseVec<T>>,
    pub pivot_cols: Vec<usize>,
}

/// Row-reduce to reduced echelon form. The pivot of each step is the first
/// structurally nonzero entry in a row-major scan of the remaining rows.
pub fn echelon<F: Field>(m: &SparseMatrix<F>) -> Echelon<F> {
    let mut rows: Vec<SparseVec<F>> = Vec::new();
    for r in 0..m.rows {
        let mut row = SparseVec::new();
        for c in 0..m.cols {
            let v = m.get(r, c);
            if !v.is_zero() {
                row.insert(c, v);
            }
        }
        rows.push(row);
    }
    let mut out_rows: Vec<SparseVec<F>> = Vec::new();
    let mut pivot_cols: Vec<usize> = Vec::new();
    for r in 0..rows.len() {
        let mut row = std::mem::take(&mut rows[r]);
        // reduce against established pivots
        for (p, pr) in out_rows.iter().enumerate() {
            let col = pivot_cols[p];
            if let Some(c) = row.get(&col).cloned() {
                vec_add_scaled(&mut row, pr, &(-c));
            }
        }
        if let Some((&col, v)) = row.iter().next() {
            let inv = v.clone().inv();
            let mut norm = SparseVec::new();
            for (c, x) in &row {
                norm.insert(*c, x.clone() * inv.clone());
            }
            // back-substitute into earlier rows
            for (p, pr) in out_rows.iter_mut().enumerate() {
                let _ = p;
                if let Some(c) = pr.get(&col).cloned() {
                    vec_add_scaled(pr, &norm, &(-c));
                }
            }
            out_rows.push(norm);
            pivot_cols.push(col);
        }
    }
    Echelon {
        rows: out_rows,
        pivot_cols,
    }
}

/// Exact rank over the field.
pub fn rank<F: Field>(m: &SparseMatrix<F>) -> usize {
    echelon(m).pivot_cols.len()
}

/// Basis of the null space `{x : m x = 0}`, as sparse columns. Free columns
/// are taken in increasing order; each basis vector has a 1 in its free
/// coordinate.
pub fn kernel_basis<F: Field>(m: &SparseMatrix<F>) -> Vec<SparseVec<F>> {
    let ech = echelon(m);
    let pivots: std::collections::BTreeSet<usize> = ech.pivot_cols.iter().cloned().collect();
    let mut basis = Vec::new();
    for free in 0..m.cols {
        if pivots.contains(&free) {
            continue;
        }
        let mut v = SparseVec::new();
        v.insert(free, F::one());
        for (i, row) in ech.rows.iter().enumerate() {
            if let Some(c) = row.get(&free) {
                v.insert(ech.pivot_cols[i], -c.clone());
            }
        }
        basis.push(v);
    }
    basis
}

/// Solve `m x = b`; returns None when `b` is outside the column span.
pub fn solve<F: Field>(m: &SparseMatrix<F>, b: &SparseVec<F>) -> Option<SparseVec<F>> {
    // eliminate on the augmented matrix [m | b]
    let mut aug = SparseMatrix::zero(m.rows, m.cols + 1);
    for (r, c, v) in m.iter() {
        aug.set(r, c, v.clone());
    }
    for (r, v) in b {
        aug.set(*r, m.cols, v.clone());
    }
    let ech = echelon(&aug);
    let mut x = SparseVec::new();
    for (i, row) in ech.rows.iter().enumerate() {
        let p = ech.pivot_cols[i];
        if p == m.cols {
            return None; // inconsistent
        }
        if let Some(rhs) = row.get(&m.cols) {
            x.insert(p, rhs.clone());
        }
    }
    Some(x)
}

/// Express each column of `b` in terms of the columns of `m` when possible.
pub fn solve_matrix<F: Field>(m: &SparseMatrix<F>, b: &SparseMatrix<F>) -> Option<SparseMatrix<F>> {
    let mut out = SparseMatrix::zero(m.cols, b.cols);
    for c in 0..b.cols {
        let col = b.column(c);
        let x = solve(m, &col)?;
        for (r, v) in x {
            out.set(r, c, v);
        }
    }
    Some(out)
}

/// Cohomology data at one spot of a field-coefficient complex
/// `U --d_in--> V --d_out--> W`.
pub struct Subquotient<F: Scalar> {
    pub dim: usize,
    /// Kernel vectors completing a basis of the image.
    pub representatives: Vec<SparseVec<F>>,
}

/// dim ker(d_out) - rank(d_in), with representatives chosen deterministically:
/// kernel basis vectors that add new pivots after the image columns.
pub fn subquotient<F: Field>(
    d_in: &SparseMatrix<F>,
    d_out: &SparseMatrix<F>,
) -> Subquotient<F> {
    assert_eq!(d_in.rows, d_out.cols, "complex dimension mismatch");
    let ker = kernel_basis(d_out);
    // column-reduce [image | kernel] and keep kernel vectors with new pivots
    let mut cols: Vec<SparseVec<F>> = Vec::new();
    for c in 0..d_in.cols {
        cols.push(d_in.column(c));
    }
    let n_im = cols.len();
    cols.extend(ker.iter().cloned());
    // treat columns as rows of a matrix and echelonize; memory of origin kept
    let mut reduced: Vec<(usize, SparseVec<F>)> = Vec::new(); // (pivot, row)
    let mut representatives = Vec::new();
    for (idx, col) in cols.into_iter().enumerate() {
        let mut v = col;
        for (p, row) in &reduced {
            if let Some(c) = v.get(p).cloned() {
                vec_add_scaled(&mut v, row, &(-c));
            }
        }
        if let Some((&p, lead)) = v.iter().next() {
            let inv = lead.clone().inv();
            let mut norm = SparseVec::new();
            for (i, x) in &v {
                norm.insert(*i, x.clone() * inv.clone());
            }
            if idx >= n_im {
                representatives.push(norm.clone());
            }
            reduced.push((p, norm));
        }
    }
    Subquotient {
        dim: representatives.len(),
        representatives,
    }
}

/// Coordinates of `v` in the span of `basis` vectors (None if outside).
pub fn coordinates<F: Field>(
    basis: &[SparseVec<F>],
    dim: usize,
    v: &SparseVec<F>,
) -> Option<Vec<F>> {
    let mut m = SparseMatrix::zero(dim, basis.len());
    for (c, b) in basis.iter().enumerate() {
        for (r, x) in b {
            m.set(*r, c, x.clone());
        }
    }
    let x = solve(&m, v)?;
    let mut out = vec![F::zero(); basis.len()];
    for (i, c) in x {
        out[i] = c;
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{rat, Rat};

    fn m(rows: usize, cols: usize, data: &[(usize, usize, i64)]) -> SparseMatrix<Rat> {
        SparseMatrix::from_triplets(
            rows,
            cols,
            data.iter().map(|&(r, c, v)| (r, c, rat(v))).collect(),
        )
    }

    #[test]
    fn rank_zero_and_identity() {
        assert_eq!(rank(&SparseMatrix::<Rat>::zero(3, 3)), 0);
        assert_eq!(rank(&SparseMatrix::<Rat>::identity(3)), 3);
    }

    #[test]
    fn rank_dependent_rows() {
        // [[1,2,3],[2,4,6]] has rank 1
        let a = m(2, 3, &[(0, 0, 1), (0, 1, 2), (0, 2, 3), (1, 0, 2), (1, 1, 4), (1, 2, 6)]);
        assert_eq!(rank(&a), 1);
    }

    #[test]
    fn kernel_and_solve() {
        let a = m(2, 3, &[(0, 0, 1), (0, 1, 2), (0, 2, 3), (1, 0, 2), (1, 1, 4), (1, 2, 6)]);
        let k = kernel_basis(&a);
        assert_eq!(k.len(), 2);
        for v in &k {
            assert!(a.apply(v).is_empty());
        }
        let b: SparseVec<Rat> = [(0usize, rat(1)), (1usize, rat(2))].into_iter().collect();
        let x = solve(&a, &b).unwrap();
        assert_eq!(a.apply(&x), b);
        let bad: SparseVec<Rat> = [(0usize, rat(1)), (1usize, rat(3))].into_iter().collect();
        assert!(solve(&a, &bad).is_none());
    }

    #[test]
    fn subquotient_koszul() {
        // Q^2 --[1,0]--> Q : H at middle of 0 -> Q^2 -> Q has dim 1
        let d_in = SparseMatrix::<Rat>::zero(2, 0);
        let d_out = m(1, 2, &[(0, 0, 1)]);
        let h = subquotient(&d_in, &d_out);
        assert_eq!(h.dim, 1);
        // representative is the second basis vector
        assert_eq!(h.representatives[0].get(&1), Some(&rat(1)));
    }
}
