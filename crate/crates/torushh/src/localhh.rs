//! Hochschild cochains of a single chart, modeled by the small
//! super-commutative dg algebra on X, Y, X*, Y*, β with degrees
//! (0, 0, 1, 1, 2), weights (−1, +1, +1, −1, 0), relation XY = 0
//! (deformed: XY = q) and differential dX* = Yβ, dY* = Xβ.
//!
//! Overlap tori carry the model Q[X^{±1}, X*] and end lines Q[Y, Y*]
//! resp. Q[X, X*], all with zero differential.

use crate::chart::{ChartKind, ChartRing, Side};
use crate::complex::BigradedComplex;
use crate::errors::{EngineError, Result};
use crate::field::{rat, QPoly, Rat};
use crate::matrix::SparseMatrix;
use crate::report::{HHEntry, HHTable};
use num_traits::{One, Zero};
use std::collections::BTreeMap;

/// Normal-form monomial of the chart DGA. Canonical writing order is
/// X^x Y^y X*^{xs} Y*^{ys} β^beta q^q.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct DgaMono {
    pub x: i64,
    pub y: i64,
    pub xs: bool,
    pub ys: bool,
    pub beta: u32,
    pub q: usize,
}

impl DgaMono {
    pub fn one() -> Self {
        DgaMono {
            x: 0,
            y: 0,
            xs: false,
            ys: false,
            beta: 0,
            q: 0,
        }
    }

    pub fn degree(&self) -> i64 {
        self.xs as i64 + self.ys as i64 + 2 * self.beta as i64
    }

    pub fn weight(&self) -> i64 {
        self.y - self.x + self.xs as i64 - self.ys as i64
    }

    pub fn stem(&self) -> DgaMono {
        DgaMono { q: 0, ..*self }
    }

    pub fn render(&self) -> String {
        let mut parts = Vec::new();
        if self.x != 0 {
            parts.push(if self.x == 1 {
                "X".into()
            } else {
                format!("X^{}", self.x)
            });
        }
        if self.y != 0 {
            parts.push(if self.y == 1 {
                "Y".into()
            } else {
                format!("Y^{}", self.y)
            });
        }
        if self.xs {
            parts.push("X*".into());
        }
        if self.ys {
            parts.push("Y*".into());
        }
        if self.beta > 0 {
            parts.push(if self.beta == 1 {
                "b".into()
            } else {
                format!("b^{}", self.beta)
            });
        }
        if self.q > 0 {
            parts.push(if self.q == 1 {
                "q".into()
            } else {
                format!("q^{}", self.q)
            });
        }
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("")
        }
    }
}

/// Element of the chart DGA over Q.
#[derive(Clone, Debug, PartialEq)]
pub struct DgaElt {
    pub ring: ChartRing,
    terms: BTreeMap<DgaMono, Rat>,
}

impl DgaElt {
    pub fn zero(ring: ChartRing) -> Self {
        DgaElt {
            ring,
            terms: BTreeMap::new(),
        }
    }

    pub fn monomial(ring: ChartRing, m: DgaMono, c: Rat) -> Self {
        let mut e = Self::zero(ring);
        e.add_term(m, c);
        e
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&DgaMono, &Rat)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, m: DgaMono, c: Rat) {
        if c.is_zero() {
            return;
        }
        check_dga_mono(&self.ring, &m);
        let e = self.terms.entry(m).or_insert_with(Rat::zero);
        *e = e.clone() + c;
        if e.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn add(&self, rhs: &DgaElt) -> DgaElt {
        assert_eq!(self.ring, rhs.ring);
        let mut out = self.clone();
        for (m, c) in rhs.terms() {
            out.add_term(*m, c.clone());
        }
        out
    }

    pub fn sub(&self, rhs: &DgaElt) -> DgaElt {
        self.add(&rhs.scale(&-Rat::one()))
    }

    pub fn scale(&self, c: &Rat) -> DgaElt {
        let mut out = Self::zero(self.ring);
        for (m, a) in self.terms() {
            out.add_term(*m, a * c);
        }
        out
    }

    pub fn render(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (m, c) in self.terms() {
            if c.is_one() {
                parts.push(m.render());
            } else if (-c.clone()).is_one() {
                parts.push(format!("-{}", m.render()));
            } else {
                parts.push(format!("{}·{}", c, m.render()));
            }
        }
        parts.join(" + ")
    }
}

fn check_dga_mono(ring: &ChartRing, m: &DgaMono) {
    match ring.kind {
        ChartKind::NodalU(_) => {
            assert!(m.x >= 0 && m.y >= 0 && (m.x == 0 || m.y == 0));
        }
        ChartKind::TorusV(_) => assert!(m.y == 0 && !m.ys && m.beta == 0),
        ChartKind::EndLine(Side::Left) => {
            assert!(m.x == 0 && !m.xs && m.beta == 0 && m.y >= 0)
        }
        ChartKind::EndLine(Side::Right) => {
            assert!(m.y == 0 && !m.ys && m.beta == 0 && m.x >= 0)
        }
    }
    if !ring.deformed {
        assert_eq!(m.q, 0);
    }
}

/// Normalize the even part of a raw product (rewrites XY and truncates at
/// the storage order only for undeformed rings; deformed DGA blocks keep
/// all q powers, truncation happens at the ring-element level elsewhere).
fn normalize_even(ring: &ChartRing, x: i64, y: i64, q: usize) -> Option<(i64, i64, usize)> {
    match ring.kind {
        ChartKind::NodalU(_) => {
            let t = x.min(y).max(0);
            if t > 0 && !ring.deformed {
                return None;
            }
            Some((x - t, y - t, q + t as usize))
        }
        ChartKind::TorusV(_) => Some((x - y, 0, q)),
        ChartKind::EndLine(_) => Some((x, y, q)),
    }
}

/// Product with Koszul signs for the canonical writing order.
pub fn dga_multiply(a: &DgaElt, b: &DgaElt) -> DgaElt {
    assert_eq!(a.ring, b.ring);
    let mut out = DgaElt::zero(a.ring);
    for (m, c) in a.terms() {
        for (n, d) in b.terms() {
            if (m.xs && n.xs) || (m.ys && n.ys) {
                continue; // odd squares vanish
            }
            // move n's X* (if any) past m's Y* (if any)
            let sign = if m.ys && n.xs { -Rat::one() } else { Rat::one() };
            if let Some((x, y, q)) = normalize_even(&a.ring, m.x + n.x, m.y + n.y, m.q + n.q) {
                let mono = DgaMono {
                    x,
                    y,
                    xs: m.xs || n.xs,
                    ys: m.ys || n.ys,
                    beta: m.beta + n.beta,
                    q,
                };
                out.add_term(mono, c * d * &sign);
            }
        }
    }
    out
}

/// The DGA differential: the weight-0 degree-1 derivation with
/// dX* = Yβ, dY* = Xβ and d = 0 on X, Y, β, q.
pub fn dga_d(e: &DgaElt) -> DgaElt {
    let mut out = DgaElt::zero(e.ring);
    if !matches!(e.ring.kind, ChartKind::NodalU(_)) {
        return out; // overlap and end models have zero differential
    }
    for (m, c) in e.terms() {
        if m.xs {
            // X^x Y^y (dX*) Y*^{ys} β^k = X^x Y^{y+1} Y*^{ys} β^{k+1}
            if let Some((x, y, q)) = normalize_even(&e.ring, m.x, m.y + 1, m.q) {
                out.add_term(
                    DgaMono {
                        x,
                        y,
                        xs: false,
                        ys: m.ys,
                        beta: m.beta + 1,
                        q,
                    },
                    c.clone(),
                );
            }
        }
        if m.ys {
            // sign: dY* passes the X* in front when present
            let sign = if m.xs { -Rat::one() } else { Rat::one() };
            if let Some((x, y, q)) = normalize_even(&e.ring, m.x + 1, m.y, m.q) {
                out.add_term(
                    DgaMono {
                        x,
                        y,
                        xs: m.xs,
                        ys: false,
                        beta: m.beta + 1,
                        q,
                    },
                    c * &sign,
                );
            }
        }
    }
    out
}

/// Stems (q-free monomials) of the DGA block at one (degree, weight).
pub fn block_stems(ring: &ChartRing, degree: i64, weight: i64) -> Vec<DgaMono> {
    let mut out = Vec::new();
    if degree < 0 {
        return out;
    }
    let odd_combos: Vec<(bool, bool, u32)> = match ring.kind {
        ChartKind::NodalU(_) => {
            let mut v = Vec::new();
            for xs in [false, true] {
                for ys in [false, true] {
                    let rem = degree - xs as i64 - ys as i64;
                    if rem >= 0 && rem % 2 == 0 {
                        v.push((xs, ys, (rem / 2) as u32));
                    }
                }
            }
            v
        }
        ChartKind::TorusV(_) | ChartKind::EndLine(Side::Right) => {
            if degree == 0 {
                vec![(false, false, 0)]
            } else if degree == 1 {
                vec![(true, false, 0)]
            } else {
                vec![]
            }
        }
        ChartKind::EndLine(Side::Left) => {
            if degree == 0 {
                vec![(false, false, 0)]
            } else if degree == 1 {
                vec![(false, true, 0)]
            } else {
                vec![]
            }
        }
    };
    for (xs, ys, beta) in odd_combos {
        let need = weight - xs as i64 + ys as i64; // y - x must equal this
        let (x, y) = match ring.kind {
            ChartKind::NodalU(_) => {
                if need >= 0 {
                    (0, need)
                } else {
                    (-need, 0)
                }
            }
            ChartKind::TorusV(_) => (-need, 0),
            ChartKind::EndLine(Side::Left) => {
                if need < 0 {
                    continue;
                }
                (0, need)
            }
            ChartKind::EndLine(Side::Right) => {
                if need > 0 {
                    continue;
                }
                (-need, 0)
            }
        };
        out.push(DgaMono {
            x,
            y,
            xs,
            ys,
            beta,
            q: 0,
        });
    }
    out.sort();
    out
}

fn stem_label(m: &DgaMono) -> String {
    m.render()
}

/// Assemble the chart Hochschild complex as a bigraded complex.
///
/// Undeformed mode yields rational blocks; deformed mode yields free blocks
/// over the power-series coefficients with q-polynomial differentials
/// (one generator per stem).
pub enum LocalCc {
    Plain(BigradedComplex<Rat>),
    Deformed(BigradedComplex<QPoly>),
}

pub fn build_local_cc(
    ring: &ChartRing,
    degree_max: i64,
    weight_band: i64,
) -> LocalCc {
    let mut stems: BTreeMap<(i64, i64), Vec<DgaMono>> = BTreeMap::new();
    for deg in 0..=degree_max + 1 {
        for wt in -weight_band..=weight_band {
            let s = block_stems(ring, deg, wt);
            if !s.is_empty() {
                stems.insert((deg, wt), s);
            }
        }
    }
    if ring.deformed {
        let mut c = BigradedComplex::<QPoly>::new(false);
        for (k, s) in &stems {
            c.add_block(*k, s.iter().map(stem_label).collect());
        }
        for (k, s) in &stems {
            let target = (k.0 + 1, k.1);
            let Some(ts) = stems.get(&target) else {
                continue;
            };
            let index: BTreeMap<DgaMono, usize> =
                ts.iter().enumerate().map(|(i, m)| (*m, i)).collect();
            let mut m = SparseMatrix::zero(ts.len(), s.len());
            for (col, stem) in s.iter().enumerate() {
                let img = dga_d(&DgaElt::monomial(*ring, *stem, Rat::one()));
                for (mono, c0) in img.terms() {
                    let row = *index
                        .get(&mono.stem())
                        .expect("differential stays in the window");
                    m.add_to(row, col, QPoly::monomial(c0.clone(), mono.q));
                }
            }
            c.set_differential(*k, m);
        }
        LocalCc::Deformed(c)
    } else {
        let mut c = BigradedComplex::<Rat>::new(false);
        for (k, s) in &stems {
            c.add_block(*k, s.iter().map(stem_label).collect());
        }
        for (k, s) in &stems {
            let target = (k.0 + 1, k.1);
            let Some(ts) = stems.get(&target) else {
                continue;
            };
            let index: BTreeMap<DgaMono, usize> =
                ts.iter().enumerate().map(|(i, m)| (*m, i)).collect();
            let mut m = SparseMatrix::zero(ts.len(), s.len());
            for (col, stem) in s.iter().enumerate() {
                let img = dga_d(&DgaElt::monomial(*ring, *stem, Rat::one()));
                for (mono, c0) in img.terms() {
                    assert_eq!(mono.q, 0);
                    let row = *index.get(mono).expect("differential stays in the window");
                    m.add_to(row, col, c0.clone());
                }
            }
            c.set_differential(*k, m);
        }
        LocalCc::Plain(c)
    }
}

/// The chart Hochschild table on the requested window.
pub fn local_hh_table(
    ring: &ChartRing,
    degree_max: i64,
    weight_band: i64,
) -> Result<HHTable> {
    let cc = build_local_cc(ring, degree_max, weight_band);
    let mut table = HHTable::default();
    table.params.insert("chart".into(), ring.to_string());
    table
        .params
        .insert("degree_max".into(), degree_max.to_string());
    table
        .params
        .insert("weight_band".into(), weight_band.to_string());
    match cc {
        LocalCc::Plain(c) => {
            for deg in 0..=degree_max {
                for wt in -weight_band..=weight_band {
                    let h = c.cohomology(deg, wt)?;
                    if h.dim == 0 {
                        continue;
                    }
                    let labels = c.labels((deg, wt));
                    let basis = h
                        .representatives
                        .iter()
                        .map(|rep| render_rep_rat(rep, labels))
                        .collect();
                    table.entries.push(HHEntry {
                        deg,
                        wt,
                        dim: h.dim,
                        basis,
                        torsion: vec![],
                    });
                }
            }
        }
        LocalCc::Deformed(c) => {
            for deg in 0..=degree_max {
                for wt in -weight_band..=weight_band {
                    let h = c.cohomology_dvr(deg, wt)?;
                    if h.structure.free_rank == 0 && h.structure.torsion.is_empty() {
                        continue;
                    }
                    let labels = c.labels((deg, wt));
                    let mut basis: Vec<String> = h
                        .free_reps
                        .iter()
                        .map(|rep| render_rep_loc(rep, labels))
                        .collect();
                    basis.extend(
                        h.torsion_reps
                            .iter()
                            .map(|(e, rep)| format!("{} (q^{e}-torsion)", render_rep_loc(rep, labels))),
                    );
                    table.entries.push(HHEntry {
                        deg,
                        wt,
                        dim: h.structure.free_rank,
                        basis,
                        torsion: h.structure.torsion.clone(),
                    });
                }
            }
        }
    }
    table.sort();
    Ok(table)
}

fn render_rep_rat(rep: &crate::matrix::SparseVec<Rat>, labels: &[String]) -> String {
    let mut parts = Vec::new();
    for (i, c) in rep {
        if c.is_one() {
            parts.push(labels[*i].clone());
        } else if (-c.clone()).is_one() {
            parts.push(format!("-{}", labels[*i]));
        } else {
            parts.push(format!("{}·{}", c, labels[*i]));
        }
    }
    parts.join(" + ")
}

fn render_rep_loc(rep: &[crate::field::LocRat], labels: &[String]) -> String {
    let mut parts = Vec::new();
    for (i, c) in rep.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let s = c.series(3);
        if s.is_one() {
            parts.push(labels[i].clone());
        } else if (-s.clone()).is_one() {
            parts.push(format!("-{}", labels[i]));
        } else {
            parts.push(format!("({})·{}", c, labels[i]));
        }
    }
    parts.join(" + ")
}

/// Localization of a class of degree <= 1 onto an overlap torus.
///
/// The right side keeps X (image in `TorusV(i)`); the left side keeps Y and
/// lands in `TorusV(i+1)` written in its canonical coordinate
/// `X_{i+1} = Y_{i+1}^{-1}` (so the derivation YY* reads as −XX* there).
/// Classes of degree >= 2 map to zero.
pub fn localization_on_hh(e: &DgaElt, side: Side) -> DgaElt {
    let ChartKind::NodalU(i) = e.ring.kind else {
        panic!("localization source must be a nodal chart");
    };
    let target_index = match side {
        Side::Right => i,
        Side::Left => i + 1,
    };
    let target = ChartRing::torus(target_index, e.ring.deformed, e.ring.q_order);
    let mut out = DgaElt::zero(target);
    for (m, c) in e.terms() {
        if m.beta > 0 {
            continue;
        }
        match side {
            Side::Right => {
                if m.ys {
                    continue; // Y* -> 0
                }
                // X^x Y^y X*^{xs} q^j -> X^{x-y} X*^{xs} q^{j+y}
                if m.y > 0 && !e.ring.deformed {
                    continue;
                }
                out.add_term(
                    DgaMono {
                        x: m.x - m.y,
                        y: 0,
                        xs: m.xs,
                        ys: false,
                        beta: 0,
                        q: m.q + m.y as usize,
                    },
                    c.clone(),
                );
            }
            Side::Left => {
                if m.xs {
                    continue; // X* -> 0
                }
                // X -> q·X, Y -> X^{-1}, Y* -> −X^2 X*
                if m.x > 0 && !e.ring.deformed {
                    continue;
                }
                let sign = if m.ys { -Rat::one() } else { Rat::one() };
                let xexp = m.x - m.y + if m.ys { 2 } else { 0 };
                out.add_term(
                    DgaMono {
                        x: xexp,
                        y: 0,
                        xs: m.ys,
                        ys: false,
                        beta: 0,
                        q: m.q + m.x as usize,
                    },
                    c * &sign,
                );
            }
        }
    }
    out
}

/// Localization of an end-chart class onto the adjacent overlap torus.
pub fn localization_end_on_hh(e: &DgaElt, v_index: i64) -> DgaElt {
    let target = ChartRing::torus(v_index, e.ring.deformed, e.ring.q_order);
    let mut out = DgaElt::zero(target);
    for (m, c) in e.terms() {
        match e.ring.kind {
            ChartKind::EndLine(Side::Left) => {
                // Y -> X^{-1}, Y* -> −X^2 X*
                let sign = if m.ys { -Rat::one() } else { Rat::one() };
                out.add_term(
                    DgaMono {
                        x: -m.y + if m.ys { 2 } else { 0 },
                        y: 0,
                        xs: m.ys,
                        ys: false,
                        beta: 0,
                        q: m.q,
                    },
                    c * &sign,
                );
            }
            ChartKind::EndLine(Side::Right) => {
                out.add_term(*m, c.clone());
            }
            _ => panic!("localization_end_on_hh needs an end chart"),
        }
    }
    out
}

/// The degree-1 cocycle representing the weight operator Y∂_Y − X∂_X,
/// i.e. the element YY* − XX*.
pub fn weight_cocycle_class(ring: &ChartRing) -> Result<DgaElt> {
    let mut e = DgaElt::zero(*ring);
    e.add_term(
        DgaMono {
            x: 0,
            y: 1,
            xs: false,
            ys: true,
            beta: 0,
            q: 0,
        },
        Rat::one(),
    );
    e.add_term(
        DgaMono {
            x: 1,
            y: 0,
            xs: true,
            ys: false,
            beta: 0,
            q: 0,
        },
        -Rat::one(),
    );
    let d = dga_d(&e);
    if !d.is_zero() {
        return Err(EngineError::NotClosed {
            detail: format!("d(weight cocycle) = {}", d.render()),
        });
    }
    Ok(e)
}

/// Action of a degree-1 weight-0 class a·XX* + b·YY* on a ring monomial,
/// reading it as the derivation a·X∂_X + b·Y∂_Y (with ∂(q) forced by q = XY).
pub fn derivation_action(class: &DgaElt, mono: &crate::chart::Monomial) -> Rat {
    let mut a = Rat::zero();
    let mut b = Rat::zero();
    for (m, c) in class.terms() {
        match (m.x, m.y, m.xs, m.ys, m.beta, m.q) {
            (1, 0, true, false, 0, 0) => a = a + c.clone(),
            (0, 1, false, true, 0, 0) => b = b + c.clone(),
            _ => panic!("derivation_action expects a combination of XX* and YY*"),
        }
    }
    a * rat(mono.x + mono.q as i64) + b * rat(mono.y + mono.q as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Monomial;

    fn nodal(deformed: bool, k: usize) -> ChartRing {
        ChartRing::nodal(0, deformed, k)
    }

    fn mono(x: i64, y: i64, xs: bool, ys: bool, beta: u32, q: usize) -> DgaMono {
        DgaMono {
            x,
            y,
            xs,
            ys,
            beta,
            q,
        }
    }

    #[test]
    fn differential_squares_to_zero() {
        for ring in [nodal(false, 1), nodal(true, 3)] {
            for deg in 0..=5 {
                for wt in -3..=3 {
                    for stem in block_stems(&ring, deg, wt) {
                        let e = DgaElt::monomial(ring, stem, Rat::one());
                        let dd = dga_d(&dga_d(&e));
                        assert!(dd.is_zero(), "d^2 != 0 on {}", stem.render());
                    }
                }
            }
        }
    }

    #[test]
    fn differential_is_derivation() {
        let ring = nodal(true, 4);
        let samples = [
            mono(2, 0, false, false, 0, 0),
            mono(0, 1, true, false, 0, 0),
            mono(0, 0, false, true, 1, 0),
            mono(1, 0, true, true, 0, 1),
            mono(0, 3, false, false, 2, 0),
        ];
        for m in &samples {
            for n in &samples {
                let a = DgaElt::monomial(ring, *m, rat(2));
                let b = DgaElt::monomial(ring, *n, rat(3));
                let lhs = dga_d(&dga_multiply(&a, &b));
                let sign = if m.degree() % 2 == 0 {
                    Rat::one()
                } else {
                    -Rat::one()
                };
                let rhs = dga_multiply(&dga_d(&a), &b)
                    .add(&dga_multiply(&a, &dga_d(&b)).scale(&sign));
                assert_eq!(lhs, rhs, "Leibniz fails on {} · {}", m.render(), n.render());
            }
        }
    }

    #[test]
    fn degree_one_weight_zero_block() {
        let ring = nodal(false, 1);
        let stems = block_stems(&ring, 1, 0);
        // {X X*, Y Y*}
        assert_eq!(stems.len(), 2);
        assert!(stems.contains(&mono(1, 0, true, false, 0, 0)));
        assert!(stems.contains(&mono(0, 1, false, true, 0, 0)));
    }

    #[test]
    fn undeformed_table_matches_closed_form() {
        let ring = nodal(false, 1);
        let t = local_hh_table(&ring, 6, 4).unwrap();
        for wt in -4..=4 {
            assert_eq!(t.dim(0, wt), 1, "H^0 weight {wt}");
            let h1 = if wt == 0 { 2 } else { 1 };
            assert_eq!(t.dim(1, wt), h1, "H^1 weight {wt}");
            for deg in 2..=6 {
                let expect = if wt == 0 { 1 } else { 0 };
                assert_eq!(t.dim(deg, wt), expect, "H^{deg} weight {wt}");
            }
        }
    }

    #[test]
    fn deformed_table_free_and_torsion() {
        let ring = nodal(true, 3);
        let t = local_hh_table(&ring, 6, 4).unwrap();
        for wt in -4..=4 {
            assert_eq!(t.dim(0, wt), 1, "H^0 rank weight {wt}");
            assert_eq!(t.dim(1, wt), 1, "H^1 rank weight {wt}");
            assert!(t.torsion(1, wt).is_empty());
        }
        for k in 1..=3 {
            let deg = 2 * k;
            assert_eq!(t.dim(deg, 0), 0);
            assert_eq!(t.torsion(deg, 0), &[1], "β^{k} is killed by q exactly");
            for wt in [-4, -1, 1, 4] {
                assert_eq!(t.dim(deg, wt), 0);
                assert!(t.torsion(deg, wt).is_empty());
            }
        }
        for k in 1..=2 {
            let deg = 2 * k + 1;
            for wt in -4..=4 {
                assert_eq!(t.dim(deg, wt), 0, "H^{deg} weight {wt}");
                assert!(t.torsion(deg, wt).is_empty(), "H^{deg} weight {wt}");
            }
        }
        // the weight-0 H^1 generator is XX* − YY* up to sign
        let e = t.entry(1, 0).unwrap();
        assert!(
            e.basis[0].contains("X*") && e.basis[0].contains("Y*"),
            "generator {} should mix XX* and YY*",
            e.basis[0]
        );
    }

    #[test]
    fn localization_images() {
        let ring = nodal(true, 3);
        let xxs = DgaElt::monomial(ring, mono(1, 0, true, false, 0, 0), Rat::one());
        let yys = DgaElt::monomial(ring, mono(0, 1, false, true, 0, 0), Rat::one());
        // right: XX* -> XX*, YY* -> 0
        let r = localization_on_hh(&xxs, Side::Right);
        assert_eq!(
            r,
            DgaElt::monomial(
                ChartRing::torus(0, true, 3),
                mono(1, 0, true, false, 0, 0),
                Rat::one()
            )
        );
        assert!(localization_on_hh(&yys, Side::Right).is_zero());
        // XX* − YY* -> XX* on the right
        let class = xxs.sub(&yys);
        let right = localization_on_hh(&class, Side::Right);
        assert_eq!(
            right,
            DgaElt::monomial(
                ChartRing::torus(0, true, 3),
                mono(1, 0, true, false, 0, 0),
                Rat::one()
            )
        );
        // left: XX* − YY* -> −YY* which reads +XX* in the canonical coordinate
        let left = localization_on_hh(&class, Side::Left);
        assert_eq!(
            left,
            DgaElt::monomial(
                ChartRing::torus(1, true, 3),
                mono(1, 0, true, false, 0, 0),
                Rat::one()
            )
        );
        // β dies
        let b = DgaElt::monomial(ring, mono(0, 0, false, false, 1, 0), Rat::one());
        assert!(localization_on_hh(&b, Side::Right).is_zero());
    }

    #[test]
    fn weight_cocycle_is_closed_and_acts_by_weight() {
        for ring in [nodal(false, 1), nodal(true, 3)] {
            let c = weight_cocycle_class(&ring).unwrap();
            for m in [
                Monomial { x: 0, y: 3, q: 0 },
                Monomial { x: 2, y: 0, q: 0 },
                Monomial { x: 0, y: 0, q: 0 },
            ] {
                assert_eq!(derivation_action(&c, &m), rat(m.weight()));
            }
        }
        // negative control: X* alone is not closed
        let ring = nodal(false, 1);
        let e = DgaElt::monomial(ring, mono(0, 0, true, false, 0, 0), Rat::one());
        assert!(!dga_d(&e).is_zero());
    }
}
