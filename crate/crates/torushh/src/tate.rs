//! The dg category of the chain's basic sheaves: twisted structure sheaves
//! of the components, resolved by extension-by-zero cells over the chart
//! cover, with 2-periodic vertical tails and one horizontal arrow out of
//! the overlap cell.
//!
//! A cell is a pair (chart, free rank-1 module) placed in one cohomological
//! degree and carrying one weight; homs between resolved objects are
//! computed chartwise through the extension-by-zero adjunction, so a hom
//! component from a cell on chart S to a cell on chart T is a section ring
//! element, nonzero only when S = T or S is an overlap inside T.

use crate::chart::{localize_to_v, multiply, ChartKind, ChartRing, Monomial, RingElt, Side};
use crate::complex::BigradedComplex;
use crate::errors::{EngineError, Result};
use crate::field::Rat;
use crate::matrix::SparseMatrix;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Carrier {
    /// Nodal chart NodalU(i) (variables X_i, Y_{i+1}).
    U(i64),
    /// Overlap torus TorusV(i).
    V(i64),
}

impl Carrier {
    fn ring(&self, deformed: bool, q_order: usize) -> ChartRing {
        match self {
            Carrier::U(i) => ChartRing::nodal(*i, deformed, q_order),
            Carrier::V(i) => ChartRing::torus(*i, deformed, q_order),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cell {
    pub carrier: Carrier,
    pub degree: i64,
    pub weight: i64,
    pub label: CellLabel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellLabel {
    Overlap,
    /// Tail cell: side (false = tower on the left chart, true = right), position.
    Tail(bool, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TateParams {
    pub deformed: bool,
    pub q_order: usize,
    /// Number of retained 2-periodic tail steps; each step is one XY period,
    /// so a tower holds 2*depth cells.
    pub depth: usize,
    /// Component indices are restricted to |i| <= window.
    pub window: i64,
}

impl TateParams {
    pub fn new(deformed: bool, q_order: usize, depth: usize, window: i64) -> Self {
        assert!(depth >= 2, "need at least two tail steps");
        TateParams {
            deformed,
            q_order,
            depth,
            window,
        }
    }

    /// Degrees in which truncated hom cohomology agrees with the untruncated
    /// category.
    pub fn trusted_degrees(&self) -> std::ops::RangeInclusive<i64> {
        0..=(2 * self.depth as i64 - 4)
    }
}

/// A resolved twisted structure sheaf O_{C_c}(twist), twist in {-1, 0}.
#[derive(Clone, Debug)]
pub struct ResolvedObject {
    pub component: i64,
    pub twist: i64,
    pub params: TateParams,
    pub cells: Vec<Cell>,
    /// Structure maps (differential): (from, to) -> section-ring coefficient.
    maps: BTreeMap<(usize, usize), RingElt>,
}

impl ResolvedObject {
    pub fn name(&self) -> String {
        if self.twist == 0 {
            format!("O(C{})", self.component)
        } else {
            format!("O(C{})({})", self.component, self.twist)
        }
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn structure_maps(&self) -> impl Iterator<Item = (&(usize, usize), &RingElt)> {
        self.maps.iter()
    }
}

/// The ring in which hom components from a cell on `s` to a cell on `t` live;
/// None encodes the zero group.
fn hom_carrier(s: Carrier, t: Carrier) -> Option<Carrier> {
    match (s, t) {
        (Carrier::U(i), Carrier::U(j)) if i == j => Some(Carrier::U(i)),
        (Carrier::V(i), Carrier::V(j)) if i == j => Some(Carrier::V(i)),
        (Carrier::V(i), Carrier::U(j)) if j == i || j == i - 1 => Some(Carrier::V(i)),
        _ => None,
    }
}

/// Restrict a nodal-chart element onto the overlap V(i) it contains.
fn restrict_to_v(e: &RingElt, i: i64) -> RingElt {
    match e.ring.kind {
        ChartKind::NodalU(j) if j == i => localize_to_v(e, Side::Right),
        ChartKind::NodalU(j) if j == i - 1 => localize_to_v(e, Side::Left),
        ChartKind::TorusV(j) if j == i => e.clone(),
        _ => panic!("no restriction from {:?} to V({})", e.ring.kind, i),
    }
}

/// Coefficient of the composite s -> mid -> t: `late` is the coefficient of
/// mid -> t and `early` of s -> mid; the result lives in hom ring of (s, t).
fn compose_coeff(
    s: Carrier,
    mid: Carrier,
    t: Carrier,
    late: &RingElt,
    early: &RingElt,
) -> RingElt {
    let out = hom_carrier(s, t).expect("composable carriers");
    match (s, mid, out) {
        (Carrier::U(_), Carrier::U(_), Carrier::U(_)) => multiply(late, early),
        (Carrier::V(i), Carrier::U(_), Carrier::V(_)) => {
            multiply(&restrict_to_v(late, i), early)
        }
        (Carrier::V(_), Carrier::V(_), Carrier::U(_)) => multiply(late, early),
        (Carrier::V(_), Carrier::V(_), Carrier::V(_)) => multiply(late, early),
        _ => unreachable!("carrier combination cannot compose"),
    }
}

/// Build the resolved object for O_{C_c}(twist).
pub fn build_resolution(
    params: &TateParams,
    component: i64,
    twist: i64,
) -> Result<ResolvedObject> {
    if component.abs() > params.window {
        return Err(EngineError::OutOfWindow {
            index: component,
            window: params.window,
        });
    }
    assert!(twist == 0 || twist == -1, "twist must be 0 or -1");
    let tail = 2 * params.depth;
    let mut cells = Vec::new();
    // overlap cell at degree -1
    cells.push(Cell {
        carrier: Carrier::V(component),
        degree: -1,
        weight: twist, // fixed below together with the horizontal maps
        label: CellLabel::Overlap,
    });
    // left tower on NodalU(c-1): resolves the {X_{c-1} = 0} branch,
    // maps alternate X_{c-1}, Y_c starting with X_{c-1} into degree 0.
    // weights: -twist, -twist - 1, ... (the overlap cell carries -twist)
    for k in 0..tail {
        cells.push(Cell {
            carrier: Carrier::U(component - 1),
            degree: -(k as i64),
            weight: if k % 2 == 0 { -twist } else { -twist - 1 },
            label: CellLabel::Tail(false, k),
        });
    }
    // right tower on NodalU(c): resolves the {Y_{c+1} = 0} branch,
    // maps alternate Y_{c+1}, X_c; weights 0, +1, 0, ... in both twists
    // (the overlap cell absorbs the twisting constant X_c).
    for k in 0..tail {
        cells.push(Cell {
            carrier: Carrier::U(component),
            degree: -(k as i64),
            weight: if k % 2 == 0 { 0 } else { 1 },
            label: CellLabel::Tail(true, k),
        });
    }
    let mut obj = ResolvedObject {
        component,
        twist,
        params: *params,
        cells,
        maps: BTreeMap::new(),
    };
    let left_ring = ChartRing::nodal(component - 1, params.deformed, params.q_order);
    let right_ring = ChartRing::nodal(component, params.deformed, params.q_order);
    let v_ring = ChartRing::torus(component, params.deformed, params.q_order);
    let idx_left = |k: usize| 1 + k;
    let idx_right = |k: usize| 1 + tail + k;
    // vertical tails
    for k in 1..tail {
        let (lc, rc) = if k % 2 == 1 {
            (RingElt::var_x(left_ring), RingElt::var_y(right_ring))
        } else {
            (RingElt::var_y(left_ring), RingElt::var_x(right_ring))
        };
        obj.maps.insert((idx_left(k), idx_left(k - 1)), lc);
        obj.maps.insert((idx_right(k), idx_right(k - 1)), rc);
    }
    // horizontal arrow out of the overlap cell, fixed to (-1, +1) for the
    // untwisted object and (-1, X_c^{-1}) for twist -1 (the object whose
    // global sections vanish)
    obj.maps
        .insert((0, idx_left(0)), RingElt::one(v_ring).scale(&-Rat::one()));
    let right_const = if twist == 0 {
        RingElt::one(v_ring)
    } else {
        RingElt::monomial(v_ring, Monomial { x: -1, y: 0, q: 0 }, Rat::one())
    };
    obj.maps.insert((0, idx_right(0)), right_const);
    // the overlap weight comes from the left horizontal map (coefficient of
    // weight 0 into the weight-(-twist) bottom cell)
    obj.cells[0].weight = -twist;
    debug_assert!(weights_consistent(&obj));
    Ok(obj)
}

fn weights_consistent(obj: &ResolvedObject) -> bool {
    obj.maps.iter().all(|((from, to), coeff)| {
        coeff
            .homogeneous_weight()
            .map(|w| obj.cells[*from].weight == w + obj.cells[*to].weight)
            .unwrap_or(true)
    })
}

/// Relabel an object along the translation automorphism `steps` times;
/// positive steps move component i to component i + steps.
pub fn translate_object(obj: &ResolvedObject, steps: i64) -> Result<ResolvedObject> {
    if (obj.component + steps).abs() > obj.params.window {
        return Err(EngineError::OutOfWindow {
            index: obj.component + steps,
            window: obj.params.window,
        });
    }
    let shift = |c: Carrier| match c {
        Carrier::U(i) => Carrier::U(i + steps),
        Carrier::V(i) => Carrier::V(i + steps),
    };
    Ok(ResolvedObject {
        component: obj.component + steps,
        twist: obj.twist,
        params: obj.params,
        cells: obj
            .cells
            .iter()
            .map(|c| Cell {
                carrier: shift(c.carrier),
                ..*c
            })
            .collect(),
        maps: obj
            .maps
            .iter()
            .map(|(k, e)| (*k, crate::chart::translate(e, -steps)))
            .collect(),
    })
}

/// Cellwise d² report: the q-multiple of the identity on each cell.
pub struct CurvatureReport {
    /// (cell index, scalar c with d² = q·c·id into the cell two degrees up).
    pub multiples: Vec<(usize, Rat)>,
}

pub fn verify_curvature(obj: &ResolvedObject) -> Result<CurvatureReport> {
    let mut composite: BTreeMap<(usize, usize), RingElt> = BTreeMap::new();
    for ((a, b), early) in &obj.maps {
        for ((b2, c), late) in &obj.maps {
            if b2 != b {
                continue;
            }
            let coeff = compose_coeff(
                obj.cells[*a].carrier,
                obj.cells[*b].carrier,
                obj.cells[*c].carrier,
                late,
                early,
            );
            let entry = composite
                .entry((*a, *c))
                .or_insert_with(|| RingElt::zero(coeff.ring));
            *entry = entry.add(&coeff);
        }
    }
    let mut multiples = Vec::new();
    for ((a, c), e) in composite {
        if e.is_zero() {
            continue;
        }
        // must be q times the identity of a tail cell two steps down
        let same_tower = matches!(
            (obj.cells[a].label, obj.cells[c].label),
            (CellLabel::Tail(sa, ka), CellLabel::Tail(sc, kc)) if sa == sc && ka == kc + 2
        );
        if !obj.params.deformed || !same_tower {
            return Err(EngineError::CurvatureMismatch {
                cell: format!("{:?}->{:?}", obj.cells[a].label, obj.cells[c].label),
                detail: format!("unexpected d² component {:?}", e),
            });
        }
        let mut terms = e.terms();
        let (m, coeff) = terms.next().unwrap();
        if terms.next().is_some() || *m != (Monomial { x: 0, y: 0, q: 1 }) {
            return Err(EngineError::CurvatureMismatch {
                cell: format!("{:?}", obj.cells[a].label),
                detail: format!("d² = {:?} is not a multiple of q", e),
            });
        }
        multiples.push((a, coeff.clone()));
    }
    multiples.sort_by_key(|(a, _)| *a);
    Ok(CurvatureReport { multiples })
}

/// Hand-corrupt one structure map (testing hook for the negative control).
pub fn corrupt_map(obj: &mut ResolvedObject, from: usize, to: usize, e: RingElt) {
    obj.maps.insert((from, to), e);
}

/// A generator of the hom complex: monomial coefficient against a cell pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct HomGen {
    pub source: usize,
    pub target: usize,
    pub mono: Monomial,
}

/// The hom complex hom(F, F') over the requested degree range and weight
/// band, as a bigraded complex of rational blocks. Deformed objects yield a
/// curved complex (cohomology is refused wherever d² != 0).
pub struct HomComplex {
    pub complex: BigradedComplex<Rat>,
    pub gens: BTreeMap<(i64, i64), Vec<HomGen>>,
    pub source_cells: usize,
    pub target_cells: usize,
}

pub fn hom_complex(
    f: &ResolvedObject,
    g: &ResolvedObject,
    degrees: std::ops::RangeInclusive<i64>,
    weight_band: i64,
) -> HomComplex {
    assert_eq!(f.params.deformed, g.params.deformed, "deformation mismatch");
    assert_eq!(f.params.q_order, g.params.q_order, "q-order mismatch");
    let params = f.params;
    let mut gens: BTreeMap<(i64, i64), Vec<HomGen>> = BTreeMap::new();
    let degrees = (degrees.start() - 1)..=(degrees.end() + 1);
    for (si, s) in f.cells.iter().enumerate() {
        for (ti, t) in g.cells.iter().enumerate() {
            let Some(carrier) = hom_carrier(s.carrier, t.carrier) else {
                continue;
            };
            let n = t.degree - s.degree;
            if !degrees.contains(&n) {
                continue;
            }
            let ring = carrier.ring(params.deformed, params.q_order);
            for w in -weight_band..=weight_band {
                let mono_wt = w - t.weight + s.weight;
                for m in crate::chart::mono_basis(
                    &ring,
                    mono_wt,
                    mono_wt.abs() + params.q_order as i64 + 1,
                ) {
                    gens.entry((n, w)).or_default().push(HomGen {
                        source: si,
                        target: ti,
                        mono: m,
                    });
                }
            }
        }
    }
    for v in gens.values_mut() {
        v.sort();
    }
    let mut complex = BigradedComplex::new(params.deformed);
    for (k, v) in &gens {
        let labels = v
            .iter()
            .map(|h| {
                format!(
                    "{}|{}→{}",
                    h.mono.render(
                        &hom_carrier(f.cells[h.source].carrier, g.cells[h.target].carrier)
                            .unwrap()
                            .ring(params.deformed, params.q_order)
                    ),
                    h.source,
                    h.target
                )
            })
            .collect();
        complex.add_block(*k, labels);
    }
    // differential
    let index: BTreeMap<(i64, i64), BTreeMap<HomGen, usize>> = gens
        .iter()
        .map(|(k, v)| (*k, v.iter().enumerate().map(|(i, h)| (*h, i)).collect()))
        .collect();
    let keys: Vec<(i64, i64)> = gens.keys().cloned().collect();
    for k in &keys {
        let next = (k.0 + 1, k.1);
        let Some(next_index) = index.get(&next) else {
            continue;
        };
        let mut m = SparseMatrix::zero(complex.dim(next), complex.dim(*k));
        let sign = if k.0.rem_euclid(2) == 0 {
            Rat::one()
        } else {
            -Rat::one()
        };
        for (col, h) in gens[k].iter().enumerate() {
            let s = f.cells[h.source];
            let t = g.cells[h.target];
            let hring = hom_carrier(s.carrier, t.carrier)
                .unwrap()
                .ring(params.deformed, params.q_order);
            let me = RingElt::monomial(hring, h.mono, Rat::one());
            // post-compose with the structure maps of the target object
            for ((a, c), late) in &g.maps {
                if *a != h.target {
                    continue;
                }
                let tc = g.cells[*c];
                if hom_carrier(s.carrier, tc.carrier).is_none() {
                    continue;
                }
                let coeff = compose_coeff(s.carrier, t.carrier, tc.carrier, late, &me);
                for (mono, val) in coeff.terms() {
                    if let Some(&row) = next_index.get(&HomGen {
                        source: h.source,
                        target: *c,
                        mono: *mono,
                    }) {
                        m.add_to(row, col, val.clone());
                    }
                }
            }
            // pre-compose with the structure maps of the source object
            for ((a, c), early) in &f.maps {
                if *c != h.source {
                    continue;
                }
                let sc = f.cells[*a];
                if hom_carrier(sc.carrier, t.carrier).is_none() {
                    continue;
                }
                let coeff = compose_coeff(sc.carrier, s.carrier, t.carrier, &me, early);
                for (mono, val) in coeff.terms() {
                    if let Some(&row) = next_index.get(&HomGen {
                        source: *a,
                        target: h.target,
                        mono: *mono,
                    }) {
                        m.add_to(row, col, -(sign.clone() * val.clone()));
                    }
                }
            }
        }
        complex.set_differential(*k, m);
    }
    HomComplex {
        complex,
        gens,
        source_cells: f.cells.len(),
        target_cells: g.cells.len(),
    }
}

/// Section space of the target sheaf O_{C_{i'}}(twist) over the chart of one
/// source cell, with a weight-graded monomial basis. The chartwise
/// trivializations are glued over the overlap by `res_*` below; the right
/// restriction carries the twisting constant.
fn section_weights(cell: &Cell, target_component: i64) -> Option<SectionKind> {
    match cell.carrier {
        Carrier::U(j) if target_component == j => Some(SectionKind::BranchX),
        Carrier::U(j) if target_component == j + 1 => Some(SectionKind::BranchY),
        Carrier::V(i) if target_component == i => Some(SectionKind::Torus),
        _ => None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum SectionKind {
    /// C[X]·e over a nodal chart (the component's right half).
    BranchX,
    /// C[Y]·e over a nodal chart (left half).
    BranchY,
    /// C[X^{±1}]·e over the overlap torus.
    Torus,
}

impl SectionKind {
    /// Monomial exponent of the basis section of a given weight, if any;
    /// `gen_weight` is the weight of the trivializing generator e.
    fn exponent(&self, weight: i64, gen_weight: i64) -> Option<i64> {
        let need = weight - gen_weight;
        match self {
            SectionKind::BranchX => (need <= 0).then_some(-need),
            SectionKind::BranchY => (need >= 0).then_some(need),
            SectionKind::Torus => Some(-need),
        }
    }
}

/// hom(R(F), F') with the target an honest sheaf: one section space per
/// source cell, differential by pre-composition with the structure maps of
/// the source. Undeformed only. This computes RHom dimensions cleanly in
/// all degrees below the source truncation.
pub struct ModuleHom {
    pub complex: BigradedComplex<Rat>,
}

pub fn module_hom_complex(
    f: &ResolvedObject,
    target_component: i64,
    target_twist: i64,
    degree_max: i64,
    weight_band: i64,
) -> ModuleHom {
    assert!(!f.params.deformed, "module-target homs are taken at q = 0");
    assert!(target_twist == 0 || target_twist == -1);
    // trivializing-generator weights: e_L and e_V at 0; e_R at target_twist
    // (the right gluing constant is X^{-twist});
    let gen_weight = |kind: SectionKind| match kind {
        SectionKind::BranchY | SectionKind::Torus => 0,
        SectionKind::BranchX => target_twist,
    };
    // generators of hom degree n at weight w: source cell s at degree -n,
    // section monomial of weight w + wt(s)
    let mut gens: BTreeMap<(i64, i64), Vec<(usize, SectionKind, i64)>> = BTreeMap::new();
    for (si, s) in f.cells.iter().enumerate() {
        let Some(kind) = section_weights(s, target_component) else {
            continue;
        };
        let n = -s.degree;
        if !(0..=degree_max + 1).contains(&n) {
            continue;
        }
        for w in -weight_band..=weight_band {
            if let Some(e) = kind.exponent(w + s.weight, gen_weight(kind)) {
                gens.entry((n, w)).or_default().push((si, kind, e));
            }
        }
    }
    for v in gens.values_mut() {
        v.sort();
    }
    let mut complex = BigradedComplex::new(false);
    for (k, v) in &gens {
        let labels = v
            .iter()
            .map(|(si, kind, e)| format!("{:?}^{}|{}", kind, e, si))
            .collect();
        complex.add_block(*k, labels);
    }
    let index: BTreeMap<(i64, i64), BTreeMap<(usize, SectionKind, i64), usize>> = gens
        .iter()
        .map(|(k, v)| (*k, v.iter().enumerate().map(|(i, g)| (*g, i)).collect()))
        .collect();
    for (k, v) in &gens {
        let next = (k.0 + 1, k.1);
        let Some(next_index) = index.get(&next) else {
            continue;
        };
        let sign = if k.0.rem_euclid(2) == 0 {
            -Rat::one()
        } else {
            Rat::one()
        };
        let mut m = SparseMatrix::zero(complex.dim(next), complex.dim(*k));
        for (col, (si, kind, e)) in v.iter().enumerate() {
            // pre-compose with structure maps into cell si
            for ((a, c), coeff) in &f.maps {
                if c != si {
                    continue;
                }
                let Some(akind) = section_weights(&f.cells[*a], target_component) else {
                    continue;
                };
                // module action of `coeff` on the section, then restriction
                // into the section space over chart(a)
                for (mono, val) in coeff.terms() {
                    let Some(te) = act_and_restrict(*kind, *e, mono, akind, target_twist)
                    else {
                        continue;
                    };
                    if let Some(&row) = next_index.get(&(*a, akind, te)) {
                        m.add_to(row, col, sign.clone() * val.clone());
                    }
                }
            }
        }
        complex.set_differential(*k, m);
    }
    ModuleHom { complex }
}

/// Act by a chart monomial on a section and express the result in the
/// section space over the chart of the receiving cell. The branches are
/// O/(Y)- resp. O/(X)-modules, so the opposite variable acts by zero; the
/// restrictions onto the overlap send Y^e·e_L to X^{-e}·e_V and X^e·e_R to
/// X^{e - twist}·e_V (the right gluing carries the twisting constant).
/// Returns the resulting exponent, or None when the section dies.
fn act_and_restrict(
    kind: SectionKind,
    e: i64,
    mono: &Monomial,
    target_kind: SectionKind,
    target_twist: i64,
) -> Option<i64> {
    assert_eq!(mono.q, 0, "module-target homs live at q = 0");
    match (kind, target_kind) {
        (SectionKind::BranchX, SectionKind::BranchX) => {
            (mono.y == 0).then_some(e + mono.x)
        }
        (SectionKind::BranchY, SectionKind::BranchY) => {
            (mono.x == 0).then_some(e + mono.y)
        }
        (SectionKind::BranchX, SectionKind::Torus) => Some(e - target_twist + mono.x - mono.y),
        (SectionKind::BranchY, SectionKind::Torus) => Some(-e + mono.x - mono.y),
        (SectionKind::Torus, SectionKind::Torus) => Some(e + mono.x - mono.y),
        _ => panic!("no restriction from {kind:?} to {target_kind:?}"),
    }
}

/// Cohomology dimension per degree, summed over the weight band, computed
/// against the honest target sheaf. Only trusted degrees are returned.
pub fn rhom_dims(
    f: &ResolvedObject,
    g: &ResolvedObject,
    degree_max: i64,
    weight_band: i64,
) -> Result<Vec<usize>> {
    let trusted = f.params.trusted_degrees();
    let degree_max = degree_max.min(*trusted.end());
    let mh = module_hom_complex(f, g.component, g.twist, degree_max, weight_band);
    let mut out = Vec::new();
    for deg in 0..=degree_max {
        let mut total = 0;
        for w in -weight_band..=weight_band {
            total += mh.complex.cohomology(deg, w)?.dim;
        }
        out.push(total);
    }
    Ok(out)
}

/// A hom element: ring coefficients against cell pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct HomElt {
    pub components: BTreeMap<(usize, usize), RingElt>,
}

impl HomElt {
    pub fn zero() -> Self {
        HomElt {
            components: BTreeMap::new(),
        }
    }

    pub fn identity(obj: &ResolvedObject) -> Self {
        let mut components = BTreeMap::new();
        for (i, c) in obj.cells.iter().enumerate() {
            let ring = c.carrier.ring(obj.params.deformed, obj.params.q_order);
            components.insert((i, i), RingElt::one(ring));
        }
        HomElt { components }
    }

    pub fn add_component(&mut self, s: usize, t: usize, e: RingElt) {
        if e.is_zero() {
            return;
        }
        match self.components.get_mut(&(s, t)) {
            Some(cur) => {
                let sum = cur.add(&e);
                if sum.is_zero() {
                    self.components.remove(&(s, t));
                } else {
                    *cur = sum;
                }
            }
            None => {
                self.components.insert((s, t), e);
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.components.is_empty()
    }

    /// Degree when homogeneous (target degree minus source degree).
    pub fn degree(&self, f: &ResolvedObject, g: &ResolvedObject) -> Option<i64> {
        let mut it = self.components.keys();
        let (s, t) = it.next()?;
        let d = g.cells[*t].degree - f.cells[*s].degree;
        for (s, t) in it {
            if g.cells[*t].degree - f.cells[*s].degree != d {
                return None;
            }
        }
        Some(d)
    }
}

/// Composition hom(F', F'') × hom(F, F') -> hom(F, F'').
pub fn compose(
    later: &HomElt,
    earlier: &HomElt,
    f: &ResolvedObject,
    fp: &ResolvedObject,
    fpp: &ResolvedObject,
) -> HomElt {
    let mut out = HomElt::zero();
    for ((s, mid1), early) in &earlier.components {
        for ((mid2, t), late) in &later.components {
            if mid1 != mid2 {
                continue;
            }
            if hom_carrier(f.cells[*s].carrier, fpp.cells[*t].carrier).is_none() {
                continue;
            }
            let coeff = compose_coeff(
                f.cells[*s].carrier,
                fp.cells[*mid1].carrier,
                fpp.cells[*t].carrier,
                late,
                early,
            );
            out.add_component(*s, *t, coeff);
        }
    }
    out
}

/// The hom-complex differential applied to a hom element.
pub fn hom_d(e: &HomElt, f: &ResolvedObject, g: &ResolvedObject) -> HomElt {
    if e.is_zero() {
        return HomElt::zero();
    }
    let deg = e.degree(f, g).expect("homogeneous element required");
    let sign = if deg.rem_euclid(2) == 0 {
        Rat::one()
    } else {
        -Rat::one()
    };
    let mut out = HomElt::zero();
    for ((s, t), coeff) in &e.components {
        for ((a, c), late) in &g.maps {
            if a != t {
                continue;
            }
            if hom_carrier(f.cells[*s].carrier, g.cells[*c].carrier).is_none() {
                continue;
            }
            out.add_component(
                *s,
                *c,
                compose_coeff(
                    f.cells[*s].carrier,
                    g.cells[*t].carrier,
                    g.cells[*c].carrier,
                    late,
                    coeff,
                ),
            );
        }
        for ((a, c), early) in &f.maps {
            if c != s {
                continue;
            }
            if hom_carrier(f.cells[*a].carrier, g.cells[*t].carrier).is_none() {
                continue;
            }
            let term = compose_coeff(
                f.cells[*a].carrier,
                f.cells[*s].carrier,
                g.cells[*t].carrier,
                coeff,
                early,
            );
            out.add_component(*a, *t, term.scale(&-sign.clone()));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(deformed: bool) -> TateParams {
        TateParams::new(deformed, 3, 3, 8)
    }

    #[test]
    fn undeformed_resolution_squares_to_zero() {
        let obj = build_resolution(&params(false), 0, 0).unwrap();
        let rep = verify_curvature(&obj).unwrap();
        assert!(rep.multiples.is_empty());
    }

    #[test]
    fn deformed_resolution_squares_to_q() {
        let obj = build_resolution(&params(true), 0, 0).unwrap();
        let rep = verify_curvature(&obj).unwrap();
        // every tail cell of position >= 2 contributes multiple 1
        assert_eq!(rep.multiples.len(), 2 * (2 * 3 - 2));
        assert!(rep.multiples.iter().all(|(_, c)| c.is_one()));
    }

    #[test]
    fn corrupted_resolution_detected() {
        let mut obj = build_resolution(&params(true), 0, 0).unwrap();
        let ring = ChartRing::nodal(0, true, 3);
        // replace a tail map by a wrong variable
        let tail = 2 * 3;
        corrupt_map(&mut obj, 1 + tail + 1, 1 + tail, RingElt::var_x(ring));
        assert!(matches!(
            verify_curvature(&obj),
            Err(EngineError::CurvatureMismatch { .. })
        ));
    }

    #[test]
    fn translation_matches_rebuild() {
        let p = params(true);
        let a = build_resolution(&p, 0, -1).unwrap();
        let b = build_resolution(&p, 1, -1).unwrap();
        let t = translate_object(&a, 1).unwrap();
        assert_eq!(t.component, b.component);
        assert_eq!(t.cells, b.cells);
        for (k, e) in &t.maps {
            assert_eq!(b.maps.get(k), Some(e), "map {:?}", k);
        }
    }

    #[test]
    fn out_of_window_rejected() {
        let p = params(false);
        assert!(matches!(
            build_resolution(&p, 99, 0),
            Err(EngineError::OutOfWindow { .. })
        ));
    }

    #[test]
    fn far_apart_objects_have_zero_hom() {
        let p = params(false);
        let a = build_resolution(&p, 0, 0).unwrap();
        let b = build_resolution(&p, 2, 0).unwrap();
        let hc = hom_complex(&b, &a, 0..=4, 4);
        assert!(hc.gens.is_empty(), "|i - i'| >= 2 must give the zero complex");
    }

    #[test]
    fn hom_complex_is_a_complex_undeformed() {
        let p = params(false);
        let a = build_resolution(&p, 0, 0).unwrap();
        let hc = hom_complex(&a, &a, 0..=3, 4);
        hc.complex.assert_uncurved().unwrap();
    }

    #[test]
    fn identity_is_a_cocycle_and_composes() {
        let p = params(false);
        let a = build_resolution(&p, 0, 0).unwrap();
        let id = HomElt::identity(&a);
        assert!(hom_d(&id, &a, &a).is_zero());
        let idid = compose(&id, &id, &a, &a, &a);
        assert_eq!(idid, id);
    }

    #[test]
    fn leibniz_rule_on_samples() {
        for deformed in [false, true] {
            let p = params(deformed);
            let a = build_resolution(&p, 0, 0).unwrap();
            let b = build_resolution(&p, 1, 0).unwrap();
            // f in hom(a, b), g in hom(b, b)
            let mut f = HomElt::zero();
            // a's right tower lives on NodalU(0) which also carries b's left tower
            let tail = 2 * p.depth;
            let a_r0 = 1 + tail; // first right-tower cell of a
            let b_l1 = 1 + 1; // second left-tower cell of b
            let ring = ChartRing::nodal(0, deformed, p.q_order);
            f.add_component(a_r0, b_l1, RingElt::var_y(ring));
            let mut g = HomElt::zero();
            g.add_component(b_l1, b_l1, RingElt::var_x(ring));
            g.add_component(0, 0, RingElt::one(ChartRing::torus(1, deformed, p.q_order)));
            let gf = compose(&g, &f, &a, &b, &b);
            let lhs = hom_d(&gf, &a, &b);
            let dg = hom_d(&g, &b, &b);
            let df = hom_d(&f, &a, &b);
            let sign = Rat::one(); // |g| = 0
            let mut rhs = compose(&dg, &f, &a, &b, &b);
            let term2 = compose(&g, &df, &a, &b, &b);
            for ((s, t), e) in term2.components {
                rhs.add_component(s, t, e.scale(&sign));
            }
            for ((s, t), e) in rhs.components.iter() {
                let l = lhs.components.get(&(*s, *t));
                assert_eq!(l, Some(e), "Leibniz mismatch at {:?}", (s, t));
            }
            assert_eq!(lhs.components.len(), rhs.components.len());
        }
    }
}
