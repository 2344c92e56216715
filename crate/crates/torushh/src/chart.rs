//! Coordinate rings of the chart cover: nodal charts `Q[X_i, Y_{i+1}]/(X_i Y_{i+1})`
//! (deformed: `X_i Y_{i+1} = q`, truncated at `q^K`), torus overlaps
//! `Q[X_i^{±1}]`, and the two affine end lines of a finite chain.
//!
//! All arithmetic is by monomial rewriting with the two rules `XY -> q`
//! (or `0`) and `q^K -> 0`; the weight grading is `wt(X) = -1`, `wt(Y) = +1`,
//! `wt(q) = 0`.

use crate::field::Rat;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ChartKind {
    /// Chart around the node between components i and i+1; variables X_i, Y_{i+1}.
    NodalU(i64),
    /// Overlap torus inside component i; variable X_i, invertible.
    TorusV(i64),
    /// End chart of a finite chain: Left has variable Y, Right has variable X.
    EndLine(Side),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChartRing {
    pub kind: ChartKind,
    pub deformed: bool,
    /// q-truncation order; ignored when undeformed.
    pub q_order: usize,
}

impl ChartRing {
    pub fn nodal(i: i64, deformed: bool, q_order: usize) -> Self {
        assert!(!deformed || q_order >= 1);
        ChartRing {
            kind: ChartKind::NodalU(i),
            deformed,
            q_order,
        }
    }

    pub fn torus(i: i64, deformed: bool, q_order: usize) -> Self {
        ChartRing {
            kind: ChartKind::TorusV(i),
            deformed,
            q_order,
        }
    }

    pub fn end(side: Side, deformed: bool, q_order: usize) -> Self {
        ChartRing {
            kind: ChartKind::EndLine(side),
            deformed,
            q_order,
        }
    }

    fn k(&self) -> usize {
        if self.deformed {
            self.q_order
        } else {
            1
        }
    }
}

/// Normal-form monomial of a chart ring. Exponents: `x` of the X variable
/// (negative allowed only on torus charts), `y` of the Y variable, `q` of q.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Monomial {
    pub x: i64,
    pub y: i64,
    pub q: usize,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial { x: 0, y: 0, q: 0 }
    }

    pub fn weight(&self) -> i64 {
        self.y - self.x
    }

    pub fn total_exponent(&self) -> i64 {
        self.x.abs() + self.y.abs() + self.q as i64
    }

    pub fn render(&self, ring: &ChartRing) -> String {
        let mut parts = Vec::new();
        let (xn, yn) = var_names(ring);
        if self.x != 0 {
            parts.push(if self.x == 1 {
                xn.to_string()
            } else {
                format!("{xn}^{}", self.x)
            });
        }
        if self.y != 0 {
            parts.push(if self.y == 1 {
                yn.to_string()
            } else {
                format!("{yn}^{}", self.y)
            });
        }
        if self.q != 0 {
            parts.push(if self.q == 1 {
                "q".to_string()
            } else {
                format!("q^{}", self.q)
            });
        }
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("*")
        }
    }
}

fn var_names(ring: &ChartRing) -> (String, String) {
    match ring.kind {
        ChartKind::NodalU(i) => (format!("X{}", i), format!("Y{}", i + 1)),
        ChartKind::TorusV(i) => (format!("X{}", i), "?".into()),
        ChartKind::EndLine(Side::Left) => ("?".into(), "Y".into()),
        ChartKind::EndLine(Side::Right) => ("X".into(), "?".into()),
    }
}

/// An element of a chart ring: a finite Q-linear combination of normal-form
/// monomials.
#[derive(Clone, Debug, PartialEq)]
pub struct RingElt {
    pub ring: ChartRing,
    terms: BTreeMap<Monomial, Rat>,
}

impl RingElt {
    pub fn zero(ring: ChartRing) -> Self {
        RingElt {
            ring,
            terms: BTreeMap::new(),
        }
    }

    pub fn monomial(ring: ChartRing, m: Monomial, c: Rat) -> Self {
        let mut e = Self::zero(ring);
        e.add_term(m, c);
        e
    }

    pub fn one(ring: ChartRing) -> Self {
        Self::monomial(ring, Monomial::one(), Rat::from_integer(1.into()))
    }

    pub fn var_x(ring: ChartRing) -> Self {
        Self::monomial(ring, Monomial { x: 1, y: 0, q: 0 }, Rat::from_integer(1.into()))
    }

    pub fn var_y(ring: ChartRing) -> Self {
        Self::monomial(ring, Monomial { x: 0, y: 1, q: 0 }, Rat::from_integer(1.into()))
    }

    pub fn var_q(ring: ChartRing) -> Self {
        Self::monomial(ring, Monomial { x: 0, y: 0, q: 1 }, Rat::from_integer(1.into()))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rat)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, m: Monomial, c: Rat) {
        if c.is_zero() {
            return;
        }
        check_normal_form(&self.ring, &m);
        let entry = self.terms.entry(m).or_insert_with(Rat::zero);
        *entry = entry.clone() + c;
        if entry.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn add(&self, rhs: &RingElt) -> RingElt {
        assert_eq!(self.ring, rhs.ring, "chart mismatch");
        let mut out = self.clone();
        for (m, c) in rhs.terms() {
            out.add_term(*m, c.clone());
        }
        out
    }

    pub fn neg(&self) -> RingElt {
        let mut out = Self::zero(self.ring);
        for (m, c) in self.terms() {
            out.add_term(*m, -c.clone());
        }
        out
    }

    pub fn scale(&self, c: &Rat) -> RingElt {
        let mut out = Self::zero(self.ring);
        for (m, a) in self.terms() {
            out.add_term(*m, a * c);
        }
        out
    }

    /// Is the element weight-homogeneous? Returns its weight when nonzero.
    pub fn homogeneous_weight(&self) -> Option<i64> {
        let mut it = self.terms.keys();
        let w = it.next()?.weight();
        if self.terms.keys().all(|m| m.weight() == w) {
            Some(w)
        } else {
            None
        }
    }
}

fn check_normal_form(ring: &ChartRing, m: &Monomial) {
    match ring.kind {
        ChartKind::NodalU(_) => {
            assert!(m.x >= 0 && m.y >= 0, "negative exponent on nodal chart");
            assert!(m.x == 0 || m.y == 0, "mixed XY monomial is not normal form");
        }
        ChartKind::TorusV(_) => assert_eq!(m.y, 0, "torus chart has only X^±1"),
        ChartKind::EndLine(Side::Left) => {
            assert!(m.x == 0 && m.y >= 0, "left end chart has only Y")
        }
        ChartKind::EndLine(Side::Right) => {
            assert!(m.y == 0 && m.x >= 0, "right end chart has only X")
        }
    }
    if ring.deformed {
        assert!(m.q < ring.q_order, "q exponent above truncation order");
    } else {
        assert_eq!(m.q, 0, "undeformed ring has no q");
    }
}

/// Normal form of a raw exponent vector in the given ring: rewrites
/// `XY -> q` (deformed) or `XY -> 0` (undeformed) and truncates `q^K -> 0`.
/// Returns None when the monomial rewrites to zero.
pub fn normalize(ring: &ChartRing, x: i64, y: i64, q: usize) -> Option<Monomial> {
    match ring.kind {
        ChartKind::NodalU(_) => {
            let t = x.min(y).max(0);
            let (x, y, q) = (x - t, y - t, q + t as usize);
            if !ring.deformed && t > 0 {
                return None;
            }
            if q >= ring.k() {
                return None;
            }
            Some(Monomial { x, y, q })
        }
        ChartKind::TorusV(_) => {
            // Y is X^{-1} on the torus; fold it in.
            let x = x - y;
            if q >= ring.k() {
                return None;
            }
            Some(Monomial { x, y: 0, q })
        }
        ChartKind::EndLine(side) => {
            if q >= ring.k() {
                return None;
            }
            match side {
                Side::Left => {
                    assert!(x == 0, "left end chart has no X");
                    Some(Monomial { x: 0, y, q })
                }
                Side::Right => {
                    assert!(y == 0, "right end chart has no Y");
                    Some(Monomial { x, y: 0, q })
                }
            }
        }
    }
}

/// Product of two elements of the same chart.
pub fn multiply(a: &RingElt, b: &RingElt) -> RingElt {
    assert_eq!(a.ring, b.ring, "chart mismatch");
    let mut out = RingElt::zero(a.ring);
    for (m, c) in a.terms() {
        for (n, d) in b.terms() {
            if let Some(nf) = normalize(&a.ring, m.x + n.x, m.y + n.y, m.q + n.q) {
                out.add_term(nf, c * d);
            }
        }
    }
    out
}

/// Complete list of normal-form monomials of the given weight with total
/// exponent at most `degree_bound`, sorted lexicographically.
pub fn mono_basis(ring: &ChartRing, weight: i64, degree_bound: i64) -> Vec<Monomial> {
    let mut out = Vec::new();
    let k = ring.k();
    for q in 0..k {
        if ring.deformed || q == 0 {
            match ring.kind {
                ChartKind::NodalU(_) => {
                    // X^a (weight -a) or Y^b (weight +b), not both
                    let m = if weight <= 0 {
                        Monomial {
                            x: -weight,
                            y: 0,
                            q,
                        }
                    } else {
                        Monomial { x: 0, y: weight, q }
                    };
                    if m.total_exponent() <= degree_bound {
                        out.push(m);
                    }
                    // weight 0 has only the q-powers, already covered by x=y=0
                }
                ChartKind::TorusV(_) => {
                    let m = Monomial {
                        x: -weight,
                        y: 0,
                        q,
                    };
                    if m.total_exponent() <= degree_bound {
                        out.push(m);
                    }
                }
                ChartKind::EndLine(Side::Left) => {
                    if weight >= 0 {
                        let m = Monomial { x: 0, y: weight, q };
                        if m.total_exponent() <= degree_bound {
                            out.push(m);
                        }
                    }
                }
                ChartKind::EndLine(Side::Right) => {
                    if weight <= 0 {
                        let m = Monomial {
                            x: -weight,
                            y: 0,
                            q,
                        };
                        if m.total_exponent() <= degree_bound {
                            out.push(m);
                        }
                    }
                }
            }
        }
    }
    out.sort();
    out
}

/// Localization of a nodal-chart element onto an overlap torus.
///
/// `Side::Right` keeps X and maps onto `TorusV(i)` via `Y -> q X^{-1}`;
/// `Side::Left` keeps Y and maps onto `TorusV(i+1)`, whose canonical
/// coordinate is `X_{i+1} = Y_{i+1}^{-1}`, via `X -> q X_{i+1}`.
/// At q = 0 the opposite variable maps to 0.
pub fn localize_to_v(e: &RingElt, side: Side) -> RingElt {
    let ChartKind::NodalU(i) = e.ring.kind else {
        panic!("localize_to_v needs a nodal chart");
    };
    let target_index = match side {
        Side::Right => i,
        Side::Left => i + 1,
    };
    let target = ChartRing::torus(target_index, e.ring.deformed, e.ring.q_order);
    let mut out = RingElt::zero(target);
    for (m, c) in e.terms() {
        let (x, q_extra) = match side {
            // X^a Y^b q^j -> X^{a-b} q^{j+b}
            Side::Right => (m.x - m.y, m.y as usize),
            // X^a Y^b q^j -> X^{a-b} q^{j+a}  (in the X_{i+1} coordinate)
            Side::Left => (m.x - m.y, m.x as usize),
        };
        if q_extra > 0 && !e.ring.deformed {
            continue; // the opposite variable dies at q = 0
        }
        if let Some(nf) = normalize(&target, x, 0, m.q + q_extra) {
            out.add_term(nf, c.clone());
        }
    }
    out
}

/// Localization of an end-chart element onto the adjacent overlap torus,
/// expressed in the torus coordinate `X_v`.
pub fn localize_end_to_v(e: &RingElt, v_index: i64) -> RingElt {
    let target = ChartRing::torus(v_index, e.ring.deformed, e.ring.q_order);
    let mut out = RingElt::zero(target);
    for (m, c) in e.terms() {
        let x = match e.ring.kind {
            ChartKind::EndLine(Side::Left) => -m.y, // Y = X^{-1}
            ChartKind::EndLine(Side::Right) => m.x,
            _ => panic!("localize_end_to_v needs an end chart"),
        };
        if let Some(nf) = normalize(&target, x, 0, m.q) {
            out.add_term(nf, c.clone());
        }
    }
    out
}

/// Relabel chart indices by the translation automorphism, `steps` times:
/// variables keep their exponents and the chart index drops by `steps`
/// (one application carries X_1 to X_0).
pub fn translate(e: &RingElt, steps: i64) -> RingElt {
    let kind = match e.ring.kind {
        ChartKind::NodalU(i) => ChartKind::NodalU(i - steps),
        ChartKind::TorusV(i) => ChartKind::TorusV(i - steps),
        ChartKind::EndLine(_) => panic!("end charts do not translate"),
    };
    let ring = ChartRing {
        kind,
        ..e.ring
    };
    let mut out = RingElt::zero(ring);
    for (m, c) in e.terms() {
        out.add_term(*m, c.clone());
    }
    out
}

impl fmt::Display for ChartRing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let head = match self.kind {
            ChartKind::NodalU(i) => format!("U:{i}"),
            ChartKind::TorusV(i) => format!("V:{i}"),
            ChartKind::EndLine(Side::Left) => "E:left".to_string(),
            ChartKind::EndLine(Side::Right) => "E:right".to_string(),
        };
        if self.deformed {
            write!(f, "{head}:deformed:K={}", self.q_order)
        } else {
            write!(f, "{head}:undeformed")
        }
    }
}

impl FromStr for ChartRing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() < 3 {
            return Err(format!("bad chart token: {s}"));
        }
        let kind = match (parts[0], parts[1]) {
            ("U", i) => ChartKind::NodalU(i.parse().map_err(|_| format!("bad index in {s}"))?),
            ("V", i) => ChartKind::TorusV(i.parse().map_err(|_| format!("bad index in {s}"))?),
            ("E", "left") => ChartKind::EndLine(Side::Left),
            ("E", "right") => ChartKind::EndLine(Side::Right),
            _ => return Err(format!("bad chart token: {s}")),
        };
        match parts[2] {
            "undeformed" => Ok(ChartRing {
                kind,
                deformed: false,
                q_order: 1,
            }),
            "deformed" => {
                let k = parts
                    .get(3)
                    .and_then(|p| p.strip_prefix("K="))
                    .and_then(|p| p.parse().ok())
                    .ok_or_else(|| format!("bad q order in {s}"))?;
                Ok(ChartRing {
                    kind,
                    deformed: true,
                    q_order: k,
                })
            }
            _ => Err(format!("bad chart token: {s}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::rat;

    fn u(deformed: bool, k: usize) -> ChartRing {
        ChartRing::nodal(0, deformed, k)
    }

    #[test]
    fn nodal_multiplication_rewrites() {
        let r = u(false, 1);
        let xy = multiply(&RingElt::var_x(r), &RingElt::var_y(r));
        assert!(xy.is_zero(), "XY = 0 undeformed");

        let rd = u(true, 3);
        let xy = multiply(&RingElt::var_x(rd), &RingElt::var_y(rd));
        assert_eq!(xy, RingElt::var_q(rd), "XY = q deformed");
    }

    #[test]
    fn torus_inverse() {
        let v = ChartRing::torus(0, false, 1);
        let xinv = RingElt::monomial(v, Monomial { x: -1, y: 0, q: 0 }, rat(1));
        let x = RingElt::var_x(v);
        assert_eq!(multiply(&x, &xinv), RingElt::one(v));
    }

    #[test]
    fn mono_basis_examples() {
        let r = u(false, 1);
        assert_eq!(mono_basis(&r, 0, 5), vec![Monomial::one()]);
        assert_eq!(mono_basis(&r, 2, 5), vec![Monomial { x: 0, y: 2, q: 0 }]);
        let rd = u(true, 3);
        let b = mono_basis(&rd, 0, 5);
        assert_eq!(
            b,
            vec![
                Monomial { x: 0, y: 0, q: 0 },
                Monomial { x: 0, y: 0, q: 1 },
                Monomial { x: 0, y: 0, q: 2 }
            ]
        );
    }

    #[test]
    fn localization_rules() {
        let rd = u(true, 3);
        // Y -> q X^{-1} on the right overlap
        let y = RingElt::var_y(rd);
        let loc = localize_to_v(&y, Side::Right);
        assert_eq!(
            loc,
            RingElt::monomial(
                ChartRing::torus(0, true, 3),
                Monomial { x: -1, y: 0, q: 1 },
                rat(1)
            )
        );
        // X -> X
        let x = RingElt::var_x(rd);
        let loc = localize_to_v(&x, Side::Right);
        assert_eq!(
            loc,
            RingElt::monomial(
                ChartRing::torus(0, true, 3),
                Monomial { x: 1, y: 0, q: 0 },
                rat(1)
            )
        );
        // undeformed: Y -> 0 on the right
        let r0 = u(false, 1);
        assert!(localize_to_v(&RingElt::var_y(r0), Side::Right).is_zero());
        // ring map on a product: f*g localizes to the product of localizations
        let f = RingElt::var_x(rd).add(&RingElt::var_y(rd));
        let g = RingElt::var_y(rd);
        let lhs = localize_to_v(&multiply(&f, &g), Side::Left);
        let rhs = multiply(
            &localize_to_v(&f, Side::Left),
            &localize_to_v(&g, Side::Left),
        );
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn translate_relabels() {
        let r1 = ChartRing::nodal(1, false, 1);
        let x1 = RingElt::var_x(r1);
        let moved = translate(&x1, 1);
        assert_eq!(moved.ring.kind, ChartKind::NodalU(0));
        // tr then tr^{-1} is the identity
        assert_eq!(translate(&moved, -1), x1);
    }

    #[test]
    fn chart_tokens_roundtrip() {
        for s in [
            "U:3:deformed:K=4",
            "U:-2:undeformed",
            "V:0:deformed:K=2",
            "E:left:undeformed",
            "E:right:deformed:K=3",
        ] {
            let ring: ChartRing = s.parse().unwrap();
            assert_eq!(ring.to_string(), s);
        }
    }

    #[test]
    fn weight_additive_on_products() {
        let rd = u(true, 4);
        let a = RingElt::monomial(rd, Monomial { x: 2, y: 0, q: 1 }, rat(3));
        let b = RingElt::monomial(rd, Monomial { x: 0, y: 5, q: 0 }, rat(1));
        let p = multiply(&a, &b);
        assert_eq!(p.homogeneous_weight(), Some(-2 + 5));
    }
}
