//! Linear algebra over the valuation ring `Q[q]_(q)`.
//!
//! Deformed complexes are complexes of finitely generated free modules over
//! the power-series coefficients; their cohomology is a sum of a free part
//! and cyclic q-torsion parts, both read off from a Smith form computed with
//! valuation pivoting. Matrices enter with polynomial entries and are lifted
//! to [`LocRat`] so that unit pivots can be divided out exactly.

use crate::field::{LocRat, QPoly};
use crate::matrix::SparseMatrix;
use num_traits::{One, Zero};

#[derive(Clone, Debug)]
pub struct Smith {
    /// Diagonal q-exponents, one per pivot, unsorted.
    pub exponents: Vec<usize>,
    /// Column transform: input * v = columns adapted to the form.
    pub v: Vec<Vec<LocRat>>,
    /// Inverse row transform: columns of u_inv span the adapted image basis.
    pub u_inv: Vec<Vec<LocRat>>,
}

fn dense(m: &SparseMatrix<QPoly>) -> Vec<Vec<LocRat>> {
    let mut d = vec![vec![LocRat::zero(); m.cols]; m.rows];
    for (r, c, v) in m.iter() {
        d[r][c] = LocRat::from_poly(v.clone());
    }
    d
}

fn identity(n: usize) -> Vec<Vec<LocRat>> {
    let mut d = vec![vec![LocRat::zero(); n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = LocRat::one();
    }
    d
}

/// Smith form over the valuation ring: P * M * Q = diag(q^{e_1}, ..., q^{e_r}).
/// Returns the exponents together with Q (as `v`) and P^{-1} (as `u_inv`).
/// Pivot selection: minimal valuation, ties broken by smallest (row, col).
pub fn smith(m: &SparseMatrix<QPoly>) -> Smith {
    let rows = m.rows;
    let cols = m.cols;
    let mut a = dense(m);
    let mut v = identity(cols);
    let mut u_inv = identity(rows);
    let mut exponents = Vec::new();
    let mut k = 0usize;
    while k < rows && k < cols {
        // find pivot with minimal valuation in the trailing block
        let mut best: Option<(usize, usize, usize)> = None; // (val, r, c)
        for r in k..rows {
            for c in k..cols {
                if let Some(val) = a[r][c].valuation() {
                    let better = match best {
                        None => true,
                        Some((bv, _, _)) => val < bv,
                    };
                    if better {
                        best = Some((val, r, c));
                    }
                }
            }
        }
        let Some((val, pr, pc)) = best else { break };
        // move pivot to (k, k)
        if pr != k {
            a.swap(pr, k);
            u_inv.iter_mut().for_each(|row| row.swap(pr, k));
        }
        if pc != k {
            for row in a.iter_mut() {
                row.swap(pc, k);
            }
            v.iter_mut().for_each(|row| row.swap(pc, k));
        }
        // normalize pivot to exactly q^val: divide row k by the unit part
        let unit = a[k][k]
            .div(&LocRat::from_poly(QPoly::monomial(num_traits::One::one(), val)))
            .expect("unit part");
        let unit_inv = unit.inv_unit();
        for c in 0..cols {
            a[k][c] = a[k][c].clone() * unit_inv.clone();
        }
        // row op on a is an op P; u_inv tracks P^{-1} acting on columns
        for r in 0..rows {
            u_inv[r][k] = u_inv[r][k].clone() * unit.clone();
        }
        // clear column k below/above
        for r in 0..rows {
            if r == k {
                continue;
            }
            if a[r][k].is_zero() {
                continue;
            }
            let factor = a[r][k]
                .div(&a[k][k])
                .expect("pivot has minimal valuation");
            for c in 0..cols {
                let t = factor.clone() * a[k][c].clone();
                a[r][c] = a[r][c].clone() - t;
            }
            // row_r -= factor * row_k  ==>  (u_inv) col_k += factor * col_r
            for rr in 0..rows {
                let t = factor.clone() * u_inv[rr][r].clone();
                u_inv[rr][k] = u_inv[rr][k].clone() + t;
            }
        }
        // clear row k to the right
        for c in 0..cols {
            if c == k {
                continue;
            }
            if a[k][c].is_zero() {
                continue;
            }
            let factor = a[k][c]
                .div(&a[k][k])
                .expect("pivot has minimal valuation");
            for r in 0..rows {
                let t = factor.clone() * a[r][k].clone();
                a[r][c] = a[r][c].clone() - t;
            }
            for r in 0..cols {
                let t = factor.clone() * v[r][k].clone();
                v[r][c] = v[r][c].clone() - t;
            }
        }
        exponents.push(val);
        k += 1;
        debug_assert_eq!(a[k - 1][k - 1].valuation(), Some(val));
    }
    Smith {
        exponents,
        v,
        u_inv,
    }
}

/// Free basis of `ker(m)` over the valuation ring (columns).
pub fn kernel_basis(m: &SparseMatrix<QPoly>) -> Vec<Vec<LocRat>> {
    let s = smith(m);
    let r = s.exponents.len();
    let mut out = Vec::new();
    for j in r..m.cols {
        out.push((0..m.cols).map(|i| s.v[i][j].clone()).collect());
    }
    out
}

/// Structure of a finitely generated module over the valuation ring.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModuleStructure {
    pub free_rank: usize,
    /// Exponents e of the cyclic pieces R/(q^e), e >= 1, descending.
    pub torsion: Vec<usize>,
}

impl ModuleStructure {
    pub fn total_generators(&self) -> usize {
        self.free_rank + self.torsion.len()
    }
}

/// Cokernel of `m` as an abstract module.
pub fn cokernel(m: &SparseMatrix<QPoly>) -> ModuleStructure {
    let s = smith(m);
    let mut torsion: Vec<usize> = s.exponents.iter().cloned().filter(|&e| e > 0).collect();
    torsion.sort_unstable_by(|a, b| b.cmp(a));
    ModuleStructure {
        free_rank: m.rows - s.exponents.len(),
        torsion,
    }
}

/// Cohomology of `U --d_in--> V --d_out--> W` over the valuation ring,
/// with representatives in the coordinates of V.
#[derive(Clone, Debug)]
pub struct DvrHomology {
    pub structure: ModuleStructure,
    /// Representatives of free generators (vectors over V).
    pub free_reps: Vec<Vec<LocRat>>,
    /// Representatives of torsion generators with their exponents.
    pub torsion_reps: Vec<(usize, Vec<LocRat>)>,
}

pub fn homology(d_in: &SparseMatrix<QPoly>, d_out: &SparseMatrix<QPoly>) -> DvrHomology {
    assert_eq!(d_in.rows, d_out.cols, "complex dimension mismatch");
    let n = d_in.rows;
    // kernel of d_out: free summand with unimodular basis matrix K (n x k)
    let kb = kernel_basis(d_out);
    let k = kb.len();
    if k == 0 {
        return DvrHomology {
            structure: ModuleStructure::default(),
            free_reps: vec![],
            torsion_reps: vec![],
        };
    }
    // coordinates X of d_in columns in the basis K: solve K X = d_in
    // via dense elimination over LocRat (K has unimodular column span).
    let mut aug: Vec<Vec<LocRat>> = (0..n)
        .map(|i| {
            let mut row: Vec<LocRat> = (0..k).map(|j| kb[j][i].clone()).collect();
            for c in 0..d_in.cols {
                row.push(LocRat::from_poly(d_in.get(i, c)));
            }
            row
        })
        .collect();
    // forward elimination with unit pivots (K is unimodular so unit pivots exist)
    let mut pivot_rows = Vec::new();
    for col in 0..k {
        let mut pr = None;
        for r in 0..n {
            if pivot_rows.contains(&r) {
                continue;
            }
            if aug[r][col].is_unit() {
                pr = Some(r);
                break;
            }
        }
        let pr = pr.expect("kernel basis must be unimodular");
        let inv = aug[pr][col].inv_unit();
        for c in 0..aug[pr].len() {
            aug[pr][c] = aug[pr][c].clone() * inv.clone();
        }
        for r in 0..n {
            if r == pr || aug[r][col].is_zero() {
                continue;
            }
            let f = aug[r][col].clone();
            for c in 0..aug[r].len() {
                let t = f.clone() * aug[pr][c].clone();
                aug[r][c] = aug[r][c].clone() - t;
            }
        }
        pivot_rows.push(pr);
    }
    // X[j][c] = value at pivot row of column j
    let mut x = SparseMatrix::<QPoly>::zero(k, d_in.cols);
    let mut x_loc = vec![vec![LocRat::zero(); d_in.cols]; k];
    for j in 0..k {
        let r = pivot_rows[j];
        for c in 0..d_in.cols {
            let v = aug[r][k + c].clone();
            x_loc[j][c] = v;
        }
    }
    // consistency: rows without pivots must have zero rhs (d_in lands in ker)
    for r in 0..n {
        if pivot_rows.contains(&r) {
            continue;
        }
        for c in 0..d_in.cols {
            assert!(
                aug[r][k + c].is_zero(),
                "image of d_in is not contained in ker(d_out)"
            );
        }
    }
    // Clear denominators columnwise (unit column scaling, leaves im(X)
    // unchanged) so the Smith form runs on polynomial entries.
    for c in 0..d_in.cols {
        let mut den = QPoly::one();
        for j in 0..k {
            den = den * x_loc[j][c].den().clone();
        }
        // den is a unit; scale the column by it
        for j in 0..k {
            let val = x_loc[j][c].clone() * LocRat::from_poly(den.clone());
            debug_assert!(val.den().is_one());
            x.set(j, c, val.num().clone());
        }
    }
    let s = smith(&x);
    let r = s.exponents.len();
    // module pieces in the basis b_i = columns of u_inv
    let mut free_reps = Vec::new();
    let mut torsion_reps = Vec::new();
    let mut torsion = Vec::new();
    let to_ambient = |col: &[LocRat]| -> Vec<LocRat> {
        (0..n)
            .map(|i| {
                let mut acc = LocRat::zero();
                for (j, cj) in col.iter().enumerate() {
                    acc = acc + kb[j][i].clone() * cj.clone();
                }
                acc
            })
            .collect()
    };
    for i in 0..k {
        let col: Vec<LocRat> = (0..k).map(|j| s.u_inv[j][i].clone()).collect();
        if i < r {
            let e = s.exponents[i];
            if e > 0 {
                torsion.push(e);
                torsion_reps.push((e, to_ambient(&col)));
            }
        } else {
            free_reps.push(to_ambient(&col));
        }
    }
    torsion.sort_unstable_by(|a, b| b.cmp(a));
    torsion_reps.sort_by(|a, b| b.0.cmp(&a.0));
    DvrHomology {
        structure: ModuleStructure {
            free_rank: k - r,
            torsion,
        },
        free_reps,
        torsion_reps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::rat;

    fn mq(rows: usize, cols: usize, data: &[(usize, usize, QPoly)]) -> SparseMatrix<QPoly> {
        let mut m = SparseMatrix::zero(rows, cols);
        for (r, c, v) in data {
            m.set(*r, *c, v.clone());
        }
        m
    }

    #[test]
    fn smith_diagonal_exponents() {
        // [[q, 1], [0, q]] ~ diag(1, q^2)
        let m = mq(
            2,
            2,
            &[
                (0, 0, QPoly::q()),
                (0, 1, QPoly::one()),
                (1, 1, QPoly::q()),
            ],
        );
        let s = smith(&m);
        let mut e = s.exponents.clone();
        e.sort_unstable();
        assert_eq!(e, vec![0, 2]);
    }

    #[test]
    fn kernel_of_q_times_is_zero() {
        let m = mq(1, 1, &[(0, 0, QPoly::q())]);
        assert!(kernel_basis(&m).is_empty());
        let s = cokernel(&m);
        assert_eq!(s.free_rank, 0);
        assert_eq!(s.torsion, vec![1]);
    }

    #[test]
    fn homology_free_and_torsion() {
        // 0 -> R --q--> R -> 0 at the right spot: H = R/q
        let d_in = mq(1, 1, &[(0, 0, QPoly::q())]);
        let d_out = SparseMatrix::<QPoly>::zero(0, 1);
        let h = homology(&d_in, &d_out);
        assert_eq!(h.structure.free_rank, 0);
        assert_eq!(h.structure.torsion, vec![1]);

        // 0 -> R -> 0: H = R free
        let d_in0 = SparseMatrix::<QPoly>::zero(1, 0);
        let h0 = homology(&d_in0, &d_out);
        assert_eq!(h0.structure.free_rank, 1);
        assert!(h0.structure.torsion.is_empty());
    }

    #[test]
    fn homology_unit_plus_q_unit_denominators() {
        // d_in = [[1+q],[1]] : R -> R^2, d_out = 0: H = R^2/im = R (free)
        let d_in = mq(
            2,
            1,
            &[(0, 0, QPoly::one() + QPoly::q()), (1, 0, QPoly::one())],
        );
        let d_out = SparseMatrix::<QPoly>::zero(0, 2);
        let h = homology(&d_in, &d_out);
        assert_eq!(h.structure.free_rank, 1);
        assert!(h.structure.torsion.is_empty());
        let _ = rat(0);
    }
}
