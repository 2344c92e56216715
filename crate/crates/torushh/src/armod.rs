//! Finitely presented modules over Q[u,t] with q acting as ut, carrying
//! connections along the derivation t∂t − u∂u, and the torsion/freeness
//! statements as checkable procedures: the Leibniz test for connections,
//! bounded q-torsion decisions, duals verified free with an exhibited
//! basis, the double-dual comparison, the classification of weight-invariant
//! ideals, and the specialization statement for free complexes with
//! homotopy connections.

use crate::errors::{EngineError, Result};
use crate::field::{rat, Rat};
use crate::groebner::{groebner, kernel, normal_form, tagged_basis, ModVec};
use crate::matrix::{self, SparseMatrix, SparseVec};
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Polynomial in Q[u,t]: a module vector supported at position 0.
pub type Poly = ModVec;

pub fn poly_mono(u: u32, t: u32, c: i64) -> Poly {
    ModVec::term(0, u, t, rat(c))
}

pub fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = ModVec::zero();
    for ((_, ua, ta), ca) in a.terms() {
        for ((_, ub, tb), cb) in b.terms() {
            out.add_term(0, ua + ub, ta + tb, ca * cb);
        }
    }
    out
}

/// Multiply a module vector by a polynomial.
pub fn vec_scale_poly(v: &ModVec, p: &Poly) -> ModVec {
    let mut out = ModVec::zero();
    for ((_, up, tp), cp) in p.terms() {
        out = out.add(&v.mul_mono(*up, *tp, cp));
    }
    out
}

/// Substitute t = 1 (resp. u = 1).
pub fn subst_one(v: &ModVec, t_var: bool) -> ModVec {
    let mut out = ModVec::zero();
    for ((p, u, t), c) in v.terms() {
        if t_var {
            out.add_term(*p, *u, 0, c.clone());
        } else {
            out.add_term(*p, 0, *t, c.clone());
        }
    }
    out
}

/// A finitely presented module A^gens / (relation columns).
#[derive(Clone, Debug, Default)]
pub struct PresentedModule {
    pub gens: usize,
    pub rels: Vec<ModVec>,
}

/// Connection matrix: entries mat[i][j] with the operator acting on the
/// class of x as D(x) + mat·x, D the entrywise weight derivation.
#[derive(Clone, Debug)]
pub struct Connection {
    pub mat: Vec<Vec<Poly>>,
}

impl Connection {
    pub fn zero(gens: usize) -> Self {
        Connection {
            mat: vec![vec![ModVec::zero(); gens]; gens],
        }
    }

    pub fn standard(gens: usize) -> Self {
        Self::zero(gens)
    }

    pub fn apply(&self, v: &ModVec) -> ModVec {
        // D(v) + mat·v
        let mut out = v.weight_derivation();
        for ((j, u, t), c) in v.terms() {
            for (i, row) in self.mat.iter().enumerate() {
                let entry = &row[*j];
                if entry.is_zero() {
                    continue;
                }
                for ((_, up, tp), cp) in entry.terms() {
                    out.add_term(i, u + up, t + tp, c * cp);
                }
            }
        }
        out
    }
}

/// JSON form of a module instance: polynomial entries as exponent/coefficient
/// triples `[u, t, "c"]`.
#[derive(Serialize, Deserialize)]
pub struct ModuleFile {
    pub gens: usize,
    /// relations: each column is a list of (position, u, t, coefficient).
    pub rels: Vec<Vec<(usize, u32, u32, String)>>,
    /// connection matrix entries: mat[i][j] as lists of (u, t, coefficient).
    pub connection: Option<Vec<Vec<Vec<(u32, u32, String)>>>>,
}

impl ModuleFile {
    pub fn to_module(&self) -> std::result::Result<(PresentedModule, Option<Connection>), String> {
        let parse = |s: &str| -> std::result::Result<Rat, String> {
            if let Some((n, d)) = s.split_once('/') {
                Ok(Rat::new(
                    n.trim().parse::<i64>().map_err(|e| e.to_string())?.into(),
                    d.trim().parse::<i64>().map_err(|e| e.to_string())?.into(),
                ))
            } else {
                Ok(rat(s.trim().parse::<i64>().map_err(|e| e.to_string())?))
            }
        };
        let mut rels = Vec::new();
        for col in &self.rels {
            let mut v = ModVec::zero();
            for (p, u, t, c) in col {
                v.add_term(*p, *u, *t, parse(c)?);
            }
            rels.push(v);
        }
        let m = PresentedModule {
            gens: self.gens,
            rels,
        };
        let conn = match &self.connection {
            None => None,
            Some(rows) => {
                let mut mat = Vec::new();
                for row in rows {
                    let mut r = Vec::new();
                    for entry in row {
                        let mut p = ModVec::zero();
                        for (u, t, c) in entry {
                            p.add_term(0, *u, *t, parse(c)?);
                        }
                        r.push(p);
                    }
                    mat.push(r);
                }
                Some(Connection { mat })
            }
        };
        Ok((m, conn))
    }

    pub fn from_module(m: &PresentedModule, conn: Option<&Connection>) -> Self {
        ModuleFile {
            gens: m.gens,
            rels: m
                .rels
                .iter()
                .map(|v| {
                    v.terms()
                        .map(|((p, u, t), c)| (*p, *u, *t, c.to_string()))
                        .collect()
                })
                .collect(),
            connection: conn.map(|c| {
                c.mat
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|p| {
                                p.terms()
                                    .map(|((_, u, t), c)| (*u, *t, c.to_string()))
                                    .collect()
                            })
                            .collect()
                    })
                    .collect()
            }),
        }
    }
}

/// Leibniz check: the connection descends to the cokernel iff the extended
/// operator maps every relation column back into the relation submodule.
pub fn check_connection(m: &PresentedModule, d: &Connection) -> (bool, Option<String>) {
    if m.rels.is_empty() {
        return (true, None);
    }
    let gb = groebner(&m.rels);
    for (k, r) in m.rels.iter().enumerate() {
        let v = d.apply(r);
        let nf = normal_form(&v, &gb);
        if !nf.is_zero() {
            return (
                false,
                Some(format!(
                    "relation {k}: D(r) reduces to {}",
                    nf.render(&|p| format!("e{p}"))
                )),
            );
        }
    }
    (true, None)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Locus {
    TOne,
    UOne,
    QZero,
}

/// Substitute-and-re-present at one of the three loci (by adding the
/// defining relation on every generator).
pub fn restrict(m: &PresentedModule, locus: Locus) -> PresentedModule {
    let mut rels = m.rels.clone();
    for i in 0..m.gens {
        let mut v = ModVec::zero();
        match locus {
            Locus::TOne => {
                v.add_term(i, 0, 1, Rat::one());
                v.add_term(i, 0, 0, -Rat::one());
            }
            Locus::UOne => {
                v.add_term(i, 1, 0, Rat::one());
                v.add_term(i, 0, 0, -Rat::one());
            }
            Locus::QZero => {
                v.add_term(i, 1, 1, Rat::one());
            }
        }
        rels.push(v);
    }
    PresentedModule { gens: m.gens, rels }
}

/// Bounded q-torsion decision: true iff (ut)^e kills every generator for
/// some e <= bound; inconclusive returns BoundExhausted.
pub fn is_q_torsion(m: &PresentedModule, bound: usize) -> Result<(bool, usize)> {
    if m.gens == 0 {
        return Ok((true, 0));
    }
    let gb = groebner(&m.rels);
    let mut worst = 0usize;
    for i in 0..m.gens {
        let mut found = None;
        for e in 0..=bound {
            let v = ModVec::term(i, e as u32, e as u32, Rat::one());
            if normal_form(&v, &gb).is_zero() {
                found = Some(e);
                break;
            }
        }
        match found {
            Some(e) => worst = worst.max(e),
            None => {
                // distinguish "free direction" from "bound too small": if the
                // generator survives with the same normal form at the bound,
                // the module is simply not torsion there.
                let v = ModVec::term(i, bound as u32, bound as u32, Rat::one());
                let nf = normal_form(&v, &gb);
                if nf.is_zero() {
                    unreachable!()
                }
                return Ok((false, bound));
            }
        }
    }
    Ok((true, worst))
}

/// Bounded q-torsion decision for a single vector modulo the relations.
fn vector_q_torsion(v: &ModVec, gb: &[ModVec], bound: usize) -> Option<usize> {
    for e in 0..=bound {
        let scaled = v.mul_mono(e as u32, e as u32, &Rat::one());
        if normal_form(&scaled, gb).is_zero() {
            return Some(e);
        }
    }
    None
}

/// The dual presented as a free module with an exhibited basis of
/// functionals (vectors in A^gens representing e_i ↦ v[i]).
pub struct DualModule {
    pub rank: usize,
    pub basis: Vec<ModVec>,
}

pub fn dual_module(m: &PresentedModule) -> Result<DualModule> {
    if m.rels.is_empty() {
        return Ok(DualModule {
            rank: m.gens,
            basis: (0..m.gens).map(ModVec::gen).collect(),
        });
    }
    // functionals = kernel of x -> (<x, rel_k>)_k
    let cols: Vec<ModVec> = (0..m.gens)
        .map(|i| {
            let mut v = ModVec::zero();
            for (k, r) in m.rels.iter().enumerate() {
                for ((p, u, t), c) in r.terms() {
                    if *p == i {
                        v.add_term(k, *u, *t, c.clone());
                    }
                }
            }
            v
        })
        .collect();
    let mut gens = kernel(&cols, m.rels.len());
    // minimalize: drop generators admitting a unit syzygy coefficient
    loop {
        if gens.is_empty() {
            break;
        }
        let syz = tagged_basis(&gens, usize::MAX / 2).syzygies();
        // find a syzygy with a constant coefficient
        let mut dropped = false;
        'search: for s in &syz {
            for ((p, u, t), _) in s.terms() {
                if *u == 0 && *t == 0 {
                    // generator p is a combination of the others
                    gens.remove(*p);
                    dropped = true;
                    break 'search;
                }
            }
        }
        if !dropped {
            if !syz.is_empty() {
                return Err(EngineError::NotFreeWitness {
                    detail: format!(
                        "{} generators with {} irreducible syzygies",
                        gens.len(),
                        syz.len()
                    ),
                });
            }
            break;
        }
    }
    Ok(DualModule {
        rank: gens.len(),
        basis: gens,
    })
}

/// Report of the comparison M -> M^∨∨.
#[derive(Debug)]
pub struct DoubleDualReport {
    pub dual_rank: usize,
    pub kernel_torsion_exponent: usize,
    pub cokernel_torsion_exponent: usize,
}

pub fn double_dual_comparison(
    m: &PresentedModule,
    d: &Connection,
    bound: usize,
) -> Result<DoubleDualReport> {
    let (ok, witness) = check_connection(m, d);
    assert!(ok, "connection must descend: {witness:?}");
    let dual = dual_module(m)?;
    let r = dual.rank;
    // η: M -> A^r, e_i -> (k_j[i])_j
    let eta_cols: Vec<ModVec> = (0..m.gens)
        .map(|i| {
            let mut v = ModVec::zero();
            for (j, k) in dual.basis.iter().enumerate() {
                for ((p, u, t), c) in k.terms() {
                    if *p == i {
                        v.add_term(j, *u, *t, c.clone());
                    }
                }
            }
            v
        })
        .collect();
    // kernel of η on M: preimages of 0 modulo relations
    let mut ker_cols = eta_cols.clone();
    // also allow relation columns mapped into the target to absorb:
    // ker(M -> A^r) lifts to {x : η(x) ∈ 0} + rels
    let ker_f = kernel(&ker_cols, r);
    let rel_gb = groebner(&m.rels);
    let mut kernel_exp = 0usize;
    for k in &ker_f {
        match vector_q_torsion(k, &rel_gb, bound) {
            Some(e) => kernel_exp = kernel_exp.max(e),
            None => return Err(EngineError::BoundExhausted { bound }),
        }
    }
    // cokernel of η: A^r / (η(e_i), plus images of relations are already
    // combinations, so the generator images suffice)
    let coker = PresentedModule {
        gens: r,
        rels: {
            let mut v: Vec<ModVec> = Vec::new();
            for i in 0..m.gens {
                v.push(eta_cols[i].clone());
            }
            v
        },
    };
    let (torsion, exp) = is_q_torsion(&coker, bound)?;
    if !torsion {
        return Err(EngineError::BoundExhausted { bound });
    }
    ker_cols.clear();
    Ok(DoubleDualReport {
        dual_rank: r,
        kernel_torsion_exponent: kernel_exp,
        cokernel_torsion_exponent: exp,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum InvariantPrime {
    Zero,
    U,
    T,
    UT,
}

#[derive(Debug)]
pub struct PrimeReport {
    pub minimal: BTreeSet<InvariantPrime>,
    pub embedded_origin: bool,
}

/// Minimal primes over a weight-homogeneous ideal, among the only four
/// candidates; each generator must factor as u^a t^b · p(ut).
pub fn invariant_ideal_primes(gens: &[Poly]) -> Result<PrimeReport> {
    let nonzero: Vec<&Poly> = gens.iter().filter(|g| !g.is_zero()).collect();
    if nonzero.is_empty() {
        let mut minimal = BTreeSet::new();
        minimal.insert(InvariantPrime::Zero);
        return Ok(PrimeReport {
            minimal,
            embedded_origin: false,
        });
    }
    // local exponents (a + v, b + v) per generator
    let mut exps: Vec<(u32, u32)> = Vec::new();
    for g in &nonzero {
        let mut weight = None;
        for ((_, u, t), _) in g.terms() {
            let w = *t as i64 - *u as i64;
            match weight {
                None => weight = Some(w),
                Some(w0) if w0 == w => {}
                _ => {
                    return Err(EngineError::NotInvariant {
                        witness: g.render(&|_| "1".into()),
                    })
                }
            }
        }
        // weight-homogeneous: monomials are u^{a+k} t^{b+k}; the local
        // valuation keeps the minimal k
        let a = g.terms().map(|((_, u, _), _)| *u).min().unwrap();
        let b = g.terms().map(|((_, _, t), _)| *t).min().unwrap();
        exps.push((a, b));
    }
    if exps.iter().any(|(a, b)| *a == 0 && *b == 0) {
        // the ideal is the unit ideal near the origin
        return Ok(PrimeReport {
            minimal: BTreeSet::new(),
            embedded_origin: false,
        });
    }
    // minimal staircase generators
    let mut staircase: Vec<(u32, u32)> = Vec::new();
    for e in &exps {
        if exps
            .iter()
            .any(|f| f != e && f.0 <= e.0 && f.1 <= e.1)
        {
            // dominated (keep one representative of equal pairs)
            if exps.iter().filter(|f| *f == e).count() > 1
                && !staircase.contains(e)
                && !exps.iter().any(|f| f != e && f.0 <= e.0 && f.1 <= e.1 && f != e)
            {
                staircase.push(*e);
            }
            continue;
        }
        if !staircase.contains(e) {
            staircase.push(*e);
        }
    }
    let mut minimal = BTreeSet::new();
    let all_u = staircase.iter().all(|(a, _)| *a >= 1);
    let all_t = staircase.iter().all(|(_, b)| *b >= 1);
    if all_u {
        minimal.insert(InvariantPrime::U);
    }
    if all_t {
        minimal.insert(InvariantPrime::T);
    }
    if minimal.is_empty() {
        minimal.insert(InvariantPrime::UT);
    }
    let embedded_origin = staircase.len() >= 2 && (all_u || all_t);
    Ok(PrimeReport {
        minimal,
        embedded_origin,
    })
}

/// A bounded complex of free modules with connection matrices.
#[derive(Clone, Debug)]
pub struct FreeComplex {
    pub ranks: Vec<usize>,
    /// diffs[i]: matrix of the map from step i to step i+1 (rows x cols =
    /// ranks[i+1] x ranks[i]).
    pub diffs: Vec<Vec<Vec<Poly>>>,
    /// connection matrices per step.
    pub connections: Vec<Vec<Vec<Poly>>>,
}

fn mat_apply(mat: &[Vec<Poly>], v: &ModVec) -> ModVec {
    let mut out = ModVec::zero();
    for ((j, u, t), c) in v.terms() {
        for (i, row) in mat.iter().enumerate() {
            let entry = &row[*j];
            if entry.is_zero() {
                continue;
            }
            for ((_, up, tp), cp) in entry.terms() {
                out.add_term(i, u + up, t + tp, c * cp);
            }
        }
    }
    out
}

fn mat_columns(mat: &[Vec<Poly>], cols: usize) -> Vec<ModVec> {
    (0..cols)
        .map(|j| {
            let mut v = ModVec::zero();
            for (i, row) in mat.iter().enumerate() {
                for ((_, u, t), c) in row[j].terms() {
                    v.add_term(i, *u, *t, c.clone());
                }
            }
            v
        })
        .collect()
}

impl FreeComplex {
    /// Homotopy-connection precondition: the connections commute with the
    /// differentials, i.e. Ḋ + Δ_{i+1}·d_i − d_i·Δ_i = 0.
    pub fn connection_commutes(&self) -> bool {
        for i in 0..self.diffs.len() {
            let d = &self.diffs[i];
            for col in 0..self.ranks[i] {
                let e = ModVec::gen(col);
                // Ḋ(col): derivative of the column entries
                let dcol = mat_apply(d, &e);
                let dot = dcol.weight_derivation().add(
                    &mat_apply(d, &e)
                        .weight_derivation()
                        .scale(&Rat::zero()),
                );
                // Δ_{i+1}(d e) computed connection-style minus entrywise D
                let conn_next = Connection {
                    mat: self.connections[i + 1].clone(),
                };
                let conn_here = Connection {
                    mat: self.connections[i].clone(),
                };
                let lhs = conn_next.apply(&dcol); // D(d e) + Δ_{i+1} d e
                let rhs = {
                    let ce = conn_here.apply(&e); // D(e) + Δ_i e = Δ_i e
                    mat_apply(d, &ce)
                };
                // lhs − rhs = Ḋ e + Δ_{i+1} d e − d Δ_i e must vanish
                let diff = lhs.add(&rhs.neg());
                let _ = dot;
                if !diff.is_zero() {
                    return false;
                }
            }
        }
        true
    }

    fn restricted(&self) -> FreeComplex {
        FreeComplex {
            ranks: self.ranks.clone(),
            diffs: self
                .diffs
                .iter()
                .map(|m| {
                    m.iter()
                        .map(|row| row.iter().map(|p| subst_one(p, true)).collect())
                        .collect()
                })
                .collect(),
            connections: self.connections.clone(),
        }
    }

    /// Presentation of H^i as a module over the ambient ring (with
    /// relations; the caller may add locus relations afterwards).
    fn cohomology_presentation(&self, i: usize) -> (PresentedModule, Vec<ModVec>) {
        let rank = self.ranks[i];
        let d_out_cols = if i + 1 <= self.diffs.len() && i < self.diffs.len() {
            mat_columns(&self.diffs[i], rank)
        } else {
            vec![ModVec::zero(); rank]
        };
        let kgens: Vec<ModVec> = if i < self.diffs.len() {
            kernel(&d_out_cols, self.ranks[i + 1])
        } else {
            (0..rank).map(ModVec::gen).collect()
        };
        if kgens.is_empty() {
            return (PresentedModule::default(), kgens);
        }
        let tb = tagged_basis(&kgens, rank);
        let mut rels = tb.syzygies();
        if i > 0 {
            for c in mat_columns(&self.diffs[i - 1], self.ranks[i - 1]) {
                if c.is_zero() {
                    continue;
                }
                let coeffs = tb
                    .express(&c)
                    .expect("image lies in the kernel of a complex");
                let mut v = ModVec::zero();
                for (j, h) in coeffs.iter().enumerate() {
                    for ((_, u, t), cc) in h.terms() {
                        v.add_term(j, *u, *t, cc.clone());
                    }
                }
                rels.push(v);
            }
        }
        (
            PresentedModule {
                gens: kgens.len(),
                rels,
            },
            kgens,
        )
    }
}

/// Count of standard monomials of u-degree <= d per slice (for modules
/// presented entirely without t).
fn u_hilbert(m: &PresentedModule, dmax: u32) -> Vec<usize> {
    let gb = groebner(&m.rels);
    let lead: Vec<(usize, u32)> = gb
        .iter()
        .filter_map(|g| g.leading())
        .map(|((p, u, t), _)| {
            assert_eq!(t, 0, "u_hilbert expects t-free data");
            (p, u)
        })
        .collect();
    let mut out = Vec::new();
    let mut count = 0usize;
    for d in 0..=dmax {
        for pos in 0..m.gens {
            let reducible = lead.iter().any(|(p, u)| *p == pos && *u <= d);
            if !reducible {
                count += 1;
            }
        }
        out.push(count);
    }
    out
}

/// Degreewise verification of H^i(C/(t−1)) ≅ H^i(C)/(t−1), for complexes
/// of free modules with a commuting connection.
pub fn fgcomplex_check(c: &FreeComplex, degree_bound: u32) -> Result<bool> {
    if !c.connection_commutes() {
        return Err(EngineError::NotClosed {
            detail: "connection does not commute with the differential".into(),
        });
    }
    let restricted = c.restricted();
    for i in 0..c.ranks.len() {
        // side A: H^i(C)/(t−1): substitute into the presentation
        let (pres, kgens) = c.cohomology_presentation(i);
        let side_a = PresentedModule {
            gens: pres.gens,
            rels: pres.rels.iter().map(|r| subst_one(r, true)).collect(),
        };
        // side B: H^i of the restricted complex
        let (side_b, kgens_b) = restricted.cohomology_presentation(i);
        // natural map: restricted kernel generators expressed in side B
        if side_a.gens == 0 && side_b.gens == 0 {
            continue;
        }
        // compare u-Hilbert functions
        let ha = u_hilbert(&side_a, degree_bound);
        let hb = u_hilbert(&side_b, degree_bound);
        if ha != hb {
            return Ok(false);
        }
        // the natural map must be surjective: every B-kernel generator is a
        // combination of restricted A-kernel generators modulo boundaries
        let mut span: Vec<ModVec> = kgens.iter().map(|k| subst_one(k, true)).collect();
        if i > 0 {
            for b in mat_columns(&restricted.diffs[i - 1], restricted.ranks[i - 1]) {
                span.push(b);
            }
        }
        let tb = tagged_basis(&span, c.ranks[i]);
        for kb in &kgens_b {
            if !tb.contains(kb) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Seeded random instances with solved-for connections.
// ---------------------------------------------------------------------------

fn random_poly(rng: &mut impl Rng, max_deg: u32, density: f64) -> Poly {
    let mut p = ModVec::zero();
    for u in 0..=max_deg {
        for t in 0..=(max_deg - u) {
            if rng.gen_bool(density) {
                let c = loop {
                    let c = rng.gen_range(-2i64..=2);
                    if c != 0 {
                        break c;
                    }
                };
                p.add_term(0, u, t, rat(c));
            }
        }
    }
    p
}

/// Try to solve the Leibniz condition for a connection matrix with entries
/// of bounded degree; linear in the unknown coefficients.
pub fn solve_connection(m: &PresentedModule, max_deg: u32) -> Option<Connection> {
    if m.rels.is_empty() {
        return Some(Connection::zero(m.gens));
    }
    let gb = groebner(&m.rels);
    // unknowns: coefficient of u^a t^b in mat[i][j]
    let mut unknowns = Vec::new();
    for i in 0..m.gens {
        for j in 0..m.gens {
            for a in 0..=max_deg {
                for b in 0..=(max_deg - a) {
                    unknowns.push((i, j, a, b));
                }
            }
        }
    }
    // constraints: per relation column r_k, NF(D(r_k) + Δ r_k) = 0; build
    // the linear system over Q indexed by (relation, residual term).
    let mut rows: std::collections::BTreeMap<(usize, (usize, u32, u32)), SparseVec<Rat>> =
        Default::default();
    let mut rhs: std::collections::BTreeMap<(usize, (usize, u32, u32)), Rat> = Default::default();
    for (k, r) in m.rels.iter().enumerate() {
        let base = normal_form(&r.weight_derivation(), &gb);
        for ((p, u, t), c) in base.terms() {
            rhs.insert((k, (*p, *u, *t)), c.clone());
        }
        for (col, (i, j, a, b)) in unknowns.iter().enumerate() {
            // contribution of mat[i][j] = u^a t^b to Δ·r_k
            let mut v = ModVec::zero();
            for ((p, u, t), c) in r.terms() {
                if *p == *j {
                    v.add_term(*i, u + a, t + b, c.clone());
                }
            }
            if v.is_zero() {
                continue;
            }
            let nf = normal_form(&v, &gb);
            for ((p, u, t), c) in nf.terms() {
                rows.entry((k, (*p, *u, *t)))
                    .or_default()
                    .insert(col, c.clone());
            }
        }
    }
    let keys: Vec<(usize, (usize, u32, u32))> = {
        let mut set: BTreeSet<_> = rows.keys().cloned().collect();
        set.extend(rhs.keys().cloned());
        set.into_iter().collect()
    };
    let mut mtx = SparseMatrix::<Rat>::zero(keys.len(), unknowns.len());
    let mut bvec: SparseVec<Rat> = SparseVec::new();
    for (row, key) in keys.iter().enumerate() {
        if let Some(r) = rows.get(key) {
            for (col, c) in r {
                mtx.set(row, *col, c.clone());
            }
        }
        if let Some(c) = rhs.get(key) {
            bvec.insert(row, -c.clone());
        }
    }
    let sol = matrix::solve(&mtx, &bvec)?;
    let mut conn = Connection::zero(m.gens);
    for (col, c) in sol {
        let (i, j, a, b) = unknowns[col];
        conn.mat[i][j] = conn.mat[i][j].add(&ModVec::term(0, a, b, c));
    }
    Some(conn)
}

/// A generated instance together with its solved connection.
pub struct Instance {
    pub module: PresentedModule,
    pub connection: Connection,
}

/// Draw random presented modules until one admits a connection; reports the
/// number of discarded draws.
pub fn random_connected_module(rng: &mut impl Rng) -> (Instance, usize) {
    let mut discarded = 0usize;
    loop {
        let gens = rng.gen_range(1..=2usize);
        let n_rels = rng.gen_range(0..=2usize);
        let mut rels = Vec::new();
        for _ in 0..n_rels {
            let mut v = ModVec::zero();
            for i in 0..gens {
                let p = random_poly(rng, 2, 0.35);
                for ((_, u, t), c) in p.terms() {
                    v.add_term(i, *u, *t, c.clone());
                }
            }
            if !v.is_zero() {
                rels.push(v);
            }
        }
        let m = PresentedModule { gens, rels };
        match solve_connection(&m, 2) {
            Some(conn) => {
                let (ok, _) = check_connection(&m, &conn);
                assert!(ok, "solved connection must satisfy Leibniz");
                return (
                    Instance {
                        module: m,
                        connection: conn,
                    },
                    discarded,
                );
            }
            None => discarded += 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn free(gens: usize) -> PresentedModule {
        PresentedModule { gens, rels: vec![] }
    }

    fn quotient(gens: usize, rels: Vec<ModVec>) -> PresentedModule {
        PresentedModule { gens, rels }
    }

    #[test]
    fn connection_examples() {
        // free rank 1 with the bare derivation
        let m = free(1);
        let (ok, _) = check_connection(&m, &Connection::standard(1));
        assert!(ok);
        // A/(t): D(t·e) = t·e stays in (t)
        let m = quotient(1, vec![ModVec::term(0, 0, 1, Rat::one())]);
        let (ok, _) = check_connection(&m, &Connection::zero(1));
        assert!(ok);
        // A/(t−1): D(t−1) = t is not in (t−1)
        let mut r = ModVec::term(0, 0, 1, Rat::one());
        r.add_term(0, 0, 0, -Rat::one());
        let m = quotient(1, vec![r]);
        let (ok, witness) = check_connection(&m, &Connection::zero(1));
        assert!(!ok);
        assert!(witness.is_some());
    }

    #[test]
    fn restriction_examples() {
        // A/(t−1) restricted to t=1 is everything: rank over Q[u] is 1
        let m = free(1);
        let r = restrict(&m, Locus::TOne);
        let (torsion, _) = is_q_torsion(&r, 4).unwrap();
        assert!(!torsion, "free module is not q-torsion after t=1");
        // (A/(t^2))/(t−1) = 0
        let m = quotient(1, vec![ModVec::term(0, 0, 2, Rat::one())]);
        let r = restrict(&m, Locus::TOne);
        let gb = groebner(&r.rels);
        assert!(normal_form(&ModVec::gen(0), &gb).is_zero(), "1 ∈ (t², t−1)");
    }

    #[test]
    fn q_torsion_examples() {
        // A/(u, t): q = ut kills the generator at e = 1
        let m = quotient(
            1,
            vec![
                ModVec::term(0, 1, 0, Rat::one()),
                ModVec::term(0, 0, 1, Rat::one()),
            ],
        );
        assert_eq!(is_q_torsion(&m, 4).unwrap(), (true, 1));
        // free is never q-torsion
        assert_eq!(is_q_torsion(&free(1), 6).unwrap(), (false, 6));
        // A/(t²): (ut)² ∈ (t²) at e = 2
        let m = quotient(1, vec![ModVec::term(0, 0, 2, Rat::one())]);
        assert_eq!(is_q_torsion(&m, 4).unwrap(), (true, 2));
    }

    #[test]
    fn duals() {
        // free rank 2: dual rank 2
        assert_eq!(dual_module(&free(2)).unwrap().rank, 2);
        // A/(t): Hom(A/(t), A) = 0
        let m = quotient(1, vec![ModVec::term(0, 0, 1, Rat::one())]);
        assert_eq!(dual_module(&m).unwrap().rank, 0);
        // A ⊕ A/(u,t): dual rank 1
        let m = quotient(
            2,
            vec![
                ModVec::term(1, 1, 0, Rat::one()),
                ModVec::term(1, 0, 1, Rat::one()),
            ],
        );
        assert_eq!(dual_module(&m).unwrap().rank, 1);
    }

    #[test]
    fn double_dual_skyscraper_summand() {
        // M = A ⊕ A/(u,t): kernel of M -> M^∨∨ is the skyscraper
        let m = quotient(
            2,
            vec![
                ModVec::term(1, 1, 0, Rat::one()),
                ModVec::term(1, 0, 1, Rat::one()),
            ],
        );
        let conn = solve_connection(&m, 2).expect("connection exists");
        let rep = double_dual_comparison(&m, &conn, 8).unwrap();
        assert_eq!(rep.dual_rank, 1);
        assert!(rep.kernel_torsion_exponent >= 1);
        assert_eq!(rep.cokernel_torsion_exponent, 0);
    }

    #[test]
    fn invariant_primes() {
        // (u)
        let r = invariant_ideal_primes(&[poly_mono(1, 0, 1)]).unwrap();
        assert_eq!(r.minimal.iter().collect::<Vec<_>>(), [&InvariantPrime::U]);
        // (ut) = q
        let r = invariant_ideal_primes(&[poly_mono(1, 1, 1)]).unwrap();
        assert_eq!(
            r.minimal.iter().collect::<Vec<_>>(),
            [&InvariantPrime::U, &InvariantPrime::T]
        );
        // (t², tu): minimal (t), embedded origin
        let r =
            invariant_ideal_primes(&[poly_mono(0, 2, 1), poly_mono(1, 1, 1)]).unwrap();
        assert_eq!(r.minimal.iter().collect::<Vec<_>>(), [&InvariantPrime::T]);
        assert!(r.embedded_origin);
        // non-homogeneous input rejected
        let mut bad = poly_mono(1, 0, 1);
        bad.add_term(0, 0, 1, Rat::one());
        bad.add_term(0, 0, 0, Rat::one());
        assert!(matches!(
            invariant_ideal_primes(&[bad]),
            Err(EngineError::NotInvariant { .. })
        ));
    }

    #[test]
    fn fgcomplex_multiplication_by_u() {
        // C = [A --u--> A], connection (0, 1): commutes since Ḋ(u) = -u
        // needs Δ_1·u − u·Δ_0 = u: Δ_1 = 1, Δ_0 = 0? check: -u + u·1 - u·0 = 0 ✓
        let c = FreeComplex {
            ranks: vec![1, 1],
            diffs: vec![vec![vec![poly_mono(1, 0, 1)]]],
            connections: vec![
                vec![vec![ModVec::zero()]],
                vec![vec![poly_mono(0, 0, 1)]],
            ],
        };
        assert!(c.connection_commutes());
        assert!(fgcomplex_check(&c, 6).unwrap());
        // zero differential: reduces to restriction commuting with identity
        let c = FreeComplex {
            ranks: vec![1, 1],
            diffs: vec![vec![vec![ModVec::zero()]]],
            connections: vec![vec![vec![ModVec::zero()]], vec![vec![ModVec::zero()]]],
        };
        assert!(fgcomplex_check(&c, 6).unwrap());
        // negative control: d = t−1 admits no commuting connection
        let mut tm1 = poly_mono(0, 1, 1);
        tm1.add_term(0, 0, 0, -Rat::one());
        let c = FreeComplex {
            ranks: vec![1, 1],
            diffs: vec![vec![vec![tm1]]],
            connections: vec![vec![vec![ModVec::zero()]], vec![vec![ModVec::zero()]]],
        };
        assert!(matches!(
            fgcomplex_check(&c, 6),
            Err(EngineError::NotClosed { .. })
        ));
    }

    #[test]
    fn qtorsmod_property_on_seeded_instances() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        for _ in 0..25 {
            let (inst, _) = random_connected_module(&mut rng);
            let m = &inst.module;
            let restricted = restrict(m, Locus::TOne);
            if let Ok((true, _)) = is_q_torsion(&restricted, 8) {
                let (torsion, _) = is_q_torsion(m, 8).unwrap();
                assert!(torsion, "restricted q-torsion must imply global q-torsion");
                checked += 1;
            }
        }
        assert!(checked > 0, "at least one instance hits the hypothesis");
    }
}
