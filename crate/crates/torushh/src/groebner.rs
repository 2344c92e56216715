//! Gröbner bases for submodules of free modules over Q[u,t], with the
//! degree-reverse-lexicographic order on monomials and position-over-term
//! on module components. Syzygies and membership-with-coefficients run
//! through the tag-component elimination construction.

use crate::field::Rat;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

/// Monomial u^a t^b at a module position.
pub type Key = (usize, u32, u32);

/// Element of a free module Q[u,t]^g.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ModVec {
    terms: BTreeMap<Key, Rat>,
}

/// degrevlex on (u, t): higher total degree wins; on ties the smaller
/// t-exponent wins.
fn mono_cmp(a: (u32, u32), b: (u32, u32)) -> std::cmp::Ordering {
    let da = a.0 + a.1;
    let db = b.0 + b.1;
    da.cmp(&db).then(b.1.cmp(&a.1))
}

/// POT: lower position wins, then degrevlex.
fn key_cmp(a: &Key, b: &Key) -> std::cmp::Ordering {
    b.0.cmp(&a.0).then(mono_cmp((a.1, a.2), (b.1, b.2)))
}

impl ModVec {
    pub fn zero() -> Self {
        ModVec::default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(pos: usize, u: u32, t: u32, c: Rat) -> Self {
        let mut v = ModVec::zero();
        v.add_term(pos, u, t, c);
        v
    }

    pub fn gen(pos: usize) -> Self {
        Self::term(pos, 0, 0, Rat::one())
    }

    pub fn add_term(&mut self, pos: usize, u: u32, t: u32, c: Rat) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry((pos, u, t)).or_insert_with(Rat::zero);
        *e = e.clone() + c;
        if e.is_zero() {
            self.terms.remove(&(pos, u, t));
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Key, &Rat)> {
        self.terms.iter()
    }

    pub fn add(&self, rhs: &ModVec) -> ModVec {
        let mut out = self.clone();
        for ((p, u, t), c) in rhs.terms() {
            out.add_term(*p, *u, *t, c.clone());
        }
        out
    }

    pub fn scale(&self, c: &Rat) -> ModVec {
        let mut out = ModVec::zero();
        for ((p, u, t), x) in self.terms() {
            out.add_term(*p, *u, *t, x * c);
        }
        out
    }

    pub fn neg(&self) -> ModVec {
        self.scale(&-Rat::one())
    }

    /// Multiply by the monomial u^a t^b (optionally scaled).
    pub fn mul_mono(&self, a: u32, b: u32, c: &Rat) -> ModVec {
        let mut out = ModVec::zero();
        for ((p, u, t), x) in self.terms() {
            out.add_term(*p, u + a, t + b, x * c);
        }
        out
    }

    /// Leading term in the POT/degrevlex order.
    pub fn leading(&self) -> Option<(Key, Rat)> {
        self.terms
            .iter()
            .max_by(|(a, _), (b, _)| key_cmp(a, b).reverse())
            .map(|(k, c)| (*k, c.clone()))
    }

    /// Apply the derivation t∂t − u∂u entrywise (monomials are eigenvectors).
    pub fn weight_derivation(&self) -> ModVec {
        let mut out = ModVec::zero();
        for ((p, u, t), c) in self.terms() {
            let w = *t as i64 - *u as i64;
            if w != 0 {
                out.add_term(*p, *u, *t, c * Rat::from_integer(w.into()));
            }
        }
        out
    }

    pub fn max_total_degree(&self) -> u32 {
        self.terms.keys().map(|(_, u, t)| u + t).max().unwrap_or(0)
    }

    pub fn render(&self, names: &dyn Fn(usize) -> String) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for ((p, u, t), c) in self.terms() {
            let mut s = String::new();
            if !c.is_one() {
                s.push_str(&format!("{c}·"));
            }
            if *u > 0 {
                s.push_str(&format!("u^{u}·"));
            }
            if *t > 0 {
                s.push_str(&format!("t^{t}·"));
            }
            s.push_str(&names(*p));
            parts.push(s);
        }
        parts.join(" + ")
    }
}

/// Leading-term-driven full normal form against a generating set that is
/// assumed Gröbner.
pub fn normal_form(v: &ModVec, gb: &[ModVec]) -> ModVec {
    let mut rem = ModVec::zero();
    let mut work = v.clone();
    'outer: while let Some(((p, u, t), c)) = work.leading() {
        for g in gb {
            let Some(((gp, gu, gt), gc)) = g.leading() else {
                continue;
            };
            if gp == p && gu <= u && gt <= t {
                let factor = &c / &gc;
                work = work.add(&g.mul_mono(u - gu, t - gt, &-factor));
                continue 'outer;
            }
        }
        // move the irreducible leading term to the remainder
        rem.add_term(p, u, t, c.clone());
        work.add_term(p, u, t, -c);
    }
    rem
}

/// Buchberger completion.
pub fn groebner(gens: &[ModVec]) -> Vec<ModVec> {
    let mut basis: Vec<ModVec> = gens.iter().filter(|g| !g.is_zero()).cloned().collect();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for i in 0..basis.len() {
        for j in 0..i {
            pairs.push((j, i));
        }
    }
    while let Some((i, j)) = pairs.pop() {
        let (ki, ci) = basis[i].leading().unwrap();
        let (kj, cj) = basis[j].leading().unwrap();
        if ki.0 != kj.0 {
            continue; // S-pairs only within one position
        }
        let lu = ki.1.max(kj.1);
        let lt = ki.2.max(kj.2);
        let si = basis[i].mul_mono(lu - ki.1, lt - ki.2, &(Rat::one() / ci));
        let sj = basis[j].mul_mono(lu - kj.1, lt - kj.2, &(Rat::one() / cj));
        let s = si.add(&sj.neg());
        let nf = normal_form(&s, &basis);
        if !nf.is_zero() {
            for k in 0..basis.len() {
                pairs.push((k, basis.len()));
            }
            basis.push(nf);
        }
    }
    // reduce the basis for determinism
    let mut reduced = Vec::new();
    for i in 0..basis.len() {
        let others: Vec<ModVec> = basis
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, g)| g.clone())
            .collect();
        let nf = normal_form(&basis[i], &others);
        if !nf.is_zero() {
            // normalize leading coefficient
            let (_, c) = nf.leading().unwrap();
            reduced.push(nf.scale(&(Rat::one() / c)));
        }
    }
    reduced.sort_by(|a, b| key_cmp(&a.leading().unwrap().0, &b.leading().unwrap().0));
    reduced.dedup();
    reduced
}

/// Tagged basis for membership-with-coefficients and syzygies: the tags
/// live in positions g.., ordered after every main position.
pub struct TaggedBasis {
    pub main_rank: usize,
    pub n_gens: usize,
    pub basis: Vec<ModVec>,
}

pub fn tagged_basis(gens: &[ModVec], main_rank: usize) -> TaggedBasis {
    let tagged: Vec<ModVec> = gens
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let mut v = g.clone();
            v.add_term(main_rank + i, 0, 0, Rat::one());
            v
        })
        .collect();
    TaggedBasis {
        main_rank,
        n_gens: gens.len(),
        basis: groebner(&tagged),
    }
}

impl TaggedBasis {
    /// Syzygy generators: tag parts of the basis elements with vanishing
    /// main part.
    pub fn syzygies(&self) -> Vec<ModVec> {
        self.basis
            .iter()
            .filter(|g| {
                g.terms().all(|((p, _, _), _)| *p >= self.main_rank)
            })
            .map(|g| {
                let mut v = ModVec::zero();
                for ((p, u, t), c) in g.terms() {
                    v.add_term(p - self.main_rank, *u, *t, c.clone());
                }
                v
            })
            .collect()
    }

    /// Membership with coefficients: when v lies in the span, returns h
    /// with v = Σ h_i·gens_i.
    pub fn express(&self, v: &ModVec) -> Option<Vec<ModVec>> {
        let nf = normal_form(v, &self.basis);
        if nf.terms().any(|((p, _, _), _)| *p < self.main_rank) {
            return None;
        }
        let mut out = vec![ModVec::zero(); self.n_gens];
        for ((p, u, t), c) in nf.terms() {
            out[p - self.main_rank].add_term(0, *u, *t, -c.clone());
        }
        Some(out)
    }

    /// Is v in the module generated by the gens?
    pub fn contains(&self, v: &ModVec) -> bool {
        self.express(v).is_some()
    }
}

/// Kernel generators of the module map with the given columns.
pub fn kernel(columns: &[ModVec], target_rank: usize) -> Vec<ModVec> {
    tagged_basis(columns, target_rank).syzygies()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::rat;

    fn poly(p: &[(u32, u32, i64)]) -> ModVec {
        let mut v = ModVec::zero();
        for (u, t, c) in p {
            v.add_term(0, *u, *t, rat(*c));
        }
        v
    }

    #[test]
    fn ideal_membership_ut() {
        // ideal (u t) in Q[u,t]
        let gens = vec![poly(&[(1, 1, 1)])];
        let tb = tagged_basis(&gens, 1);
        assert!(tb.contains(&poly(&[(2, 1, 3)])));
        assert!(!tb.contains(&poly(&[(1, 0, 1)])));
        let h = tb.express(&poly(&[(2, 2, 1)])).unwrap();
        assert_eq!(h.len(), 1);
        // u^2 t^2 = (u t)·(u t)
        assert_eq!(h[0], poly(&[(1, 1, 1)]));
    }

    #[test]
    fn syzygy_of_u_and_t() {
        // syzygies of (u, t) in Q[u,t]: generated by (t, -u)
        let gens = vec![poly(&[(1, 0, 1)]), poly(&[(0, 1, 1)])];
        let syz = tagged_basis(&gens, 1).syzygies();
        assert_eq!(syz.len(), 1);
        let s = &syz[0];
        // check: s_0·u + s_1·t = 0
        let mut acc = ModVec::zero();
        for ((p, u, t), c) in s.terms() {
            let g = &gens[*p];
            acc = acc.add(&g.mul_mono(*u, *t, c));
        }
        assert!(acc.is_zero());
    }

    #[test]
    fn kernel_of_matrix() {
        // kernel of [u  t]: one generator
        let cols = vec![poly(&[(1, 0, 1)]), poly(&[(0, 1, 1)])];
        let k = kernel(&cols, 1);
        assert_eq!(k.len(), 1);
    }

    #[test]
    fn groebner_of_nodal_ideal() {
        // (ut) with extra generator u^2 t: the basis reduces to (ut)
        let gens = vec![poly(&[(1, 1, 1)]), poly(&[(2, 1, 1)])];
        let gb = groebner(&gens);
        assert_eq!(gb.len(), 1);
    }
}
