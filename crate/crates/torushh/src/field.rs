//! Scalar traits and the concrete coefficient types used across the engine.
//!
//! All computation is exact. The two scalar domains are the rationals `Rat`
//! (everything undeformed) and the local ring `Q[q]_(q)` (everything
//! q-deformed), the latter represented by [`LocRat`] as a reduced fraction of
//! q-polynomials whose denominator has a nonzero constant term.

use num_rational::BigRational;
use num_traits::{One, Zero};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

/// Exact rational numbers, always in lowest terms with positive denominator.
pub type Rat = BigRational;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(n.into())
}

pub fn rat_frac(n: i64, d: i64) -> Rat {
    Rat::new(n.into(), d.into())
}

/// Minimal bound for matrix and complex entries.
pub trait Scalar:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialEq
    + Zero
    + One
    + Neg<Output = Self>
    + Sub<Output = Self>
    + Send
    + Sync
    + 'static
{
}

impl<T> Scalar for T where
    T: Clone
        + fmt::Debug
        + fmt::Display
        + PartialEq
        + Zero
        + One
        + Neg<Output = Self>
        + Sub<Output = Self>
        + Send
        + Sync
        + 'static
{
}

/// Scalars with exact division, used by Gaussian elimination.
pub trait Field: Scalar + std::ops::Div<Output = Self> {
    fn inv(&self) -> Self {
        Self::one() / self.clone()
    }
}

impl<T> Field for T where T: Scalar + std::ops::Div<Output = Self> {}

/// Dense polynomial in the deformation parameter `q` over `Rat`.
///
/// Coefficient `coeffs[j]` multiplies `q^j`; no trailing zeros are stored.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct QPoly {
    coeffs: Vec<Rat>,
}

impl QPoly {
    pub fn from_coeffs(mut coeffs: Vec<Rat>) -> Self {
        while coeffs.last().map_or(false, |c| c.is_zero()) {
            coeffs.pop();
        }
        QPoly { coeffs }
    }

    pub fn constant(c: Rat) -> Self {
        Self::from_coeffs(vec![c])
    }

    pub fn int(n: i64) -> Self {
        Self::constant(rat(n))
    }

    /// The monomial `c * q^j`.
    pub fn monomial(c: Rat, j: usize) -> Self {
        if c.is_zero() {
            return QPoly::zero();
        }
        let mut coeffs = vec![Rat::zero(); j + 1];
        coeffs[j] = c;
        QPoly { coeffs }
    }

    pub fn q() -> Self {
        Self::monomial(Rat::one(), 1)
    }

    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn coeff(&self, j: usize) -> Rat {
        self.coeffs.get(j).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    /// q-adic valuation; `None` for the zero polynomial.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    /// Exact division by `q^j`. Panics if the valuation is smaller than `j`.
    pub fn div_q_pow(&self, j: usize) -> Self {
        if self.is_zero() {
            return QPoly::zero();
        }
        assert!(
            self.valuation().unwrap() >= j,
            "div_q_pow: valuation too small"
        );
        QPoly::from_coeffs(self.coeffs[j..].to_vec())
    }

    /// Truncate away `q^k` and higher.
    pub fn truncate(&self, k: usize) -> Self {
        QPoly::from_coeffs(self.coeffs.iter().take(k).cloned().collect())
    }

    pub fn eval_at_zero(&self) -> Rat {
        self.coeff(0)
    }

    pub fn is_unit(&self) -> bool {
        !self.coeff(0).is_zero()
    }

    pub fn scale(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return QPoly::zero();
        }
        QPoly::from_coeffs(self.coeffs.iter().map(|a| a * c).collect())
    }

    /// Polynomial gcd, normalized monic. gcd(0, 0) = 0.
    pub fn gcd(a: &QPoly, b: &QPoly) -> QPoly {
        let mut x = a.clone();
        let mut y = b.clone();
        while !y.is_zero() {
            let r = x.rem(&y);
            x = y;
            y = r;
        }
        x.monic()
    }

    fn monic(&self) -> QPoly {
        match self.degree() {
            None => QPoly::zero(),
            Some(d) => {
                let lead = self.coeffs[d].clone();
                self.scale(&(Rat::one() / lead))
            }
        }
    }

    /// Euclidean remainder.
    fn rem(&self, d: &QPoly) -> QPoly {
        let dd = d.degree().expect("division by zero polynomial");
        let mut r = self.clone();
        while let Some(rd) = r.degree() {
            if rd < dd {
                break;
            }
            let factor = &r.coeffs[rd] / &d.coeffs[dd];
            let shift = rd - dd;
            let mut coeffs = r.coeffs.clone();
            for (j, c) in d.coeffs.iter().enumerate() {
                let t = c * &factor;
                coeffs[j + shift] = &coeffs[j + shift] - &t;
            }
            r = QPoly::from_coeffs(coeffs);
        }
        r
    }

    /// Euclidean quotient; exact when the remainder vanishes.
    pub fn div_exact(&self, d: &QPoly) -> Option<QPoly> {
        let dd = d.degree()?;
        let mut r = self.clone();
        let mut q = vec![Rat::zero(); self.coeffs.len().saturating_sub(dd) + 1];
        while let Some(rd) = r.degree() {
            if rd < dd {
                break;
            }
            let factor = &r.coeffs[rd] / &d.coeffs[dd];
            let shift = rd - dd;
            q[shift] = factor.clone();
            let mut coeffs = r.coeffs.clone();
            for (j, c) in d.coeffs.iter().enumerate() {
                let t = c * &factor;
                coeffs[j + shift] = &coeffs[j + shift] - &t;
            }
            r = QPoly::from_coeffs(coeffs);
        }
        if r.is_zero() {
            Some(QPoly::from_coeffs(q))
        } else {
            None
        }
    }
}

impl fmt::Debug for QPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for QPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (j, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match j {
                0 => write!(f, "{}", c)?,
                1 if c.is_one() => write!(f, "q")?,
                1 => write!(f, "{}*q", c)?,
                _ if c.is_one() => write!(f, "q^{}", j)?,
                _ => write!(f, "{}*q^{}", c, j)?,
            }
        }
        Ok(())
    }
}

impl Zero for QPoly {
    fn zero() -> Self {
        QPoly { coeffs: vec![] }
    }
    fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
}

impl One for QPoly {
    fn one() -> Self {
        QPoly::constant(Rat::one())
    }
}

impl Add for QPoly {
    type Output = QPoly;
    fn add(self, rhs: QPoly) -> QPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut coeffs = Vec::with_capacity(n);
        for j in 0..n {
            coeffs.push(self.coeff(j) + rhs.coeff(j));
        }
        QPoly::from_coeffs(coeffs)
    }
}

impl AddAssign for QPoly {
    fn add_assign(&mut self, rhs: QPoly) {
        *self = self.clone() + rhs;
    }
}

impl Sub for QPoly {
    type Output = QPoly;
    fn sub(self, rhs: QPoly) -> QPoly {
        self + (-rhs)
    }
}

impl SubAssign for QPoly {
    fn sub_assign(&mut self, rhs: QPoly) {
        *self = self.clone() - rhs;
    }
}

impl Neg for QPoly {
    type Output = QPoly;
    fn neg(self) -> QPoly {
        QPoly {
            coeffs: self.coeffs.into_iter().map(|c| -c).collect(),
        }
    }
}

impl Mul for QPoly {
    type Output = QPoly;
    fn mul(self, rhs: QPoly) -> QPoly {
        if self.is_zero() || rhs.is_zero() {
            return QPoly::zero();
        }
        let mut coeffs = vec![Rat::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let t = a * b;
                coeffs[i + j] = &coeffs[i + j] + &t;
            }
        }
        QPoly::from_coeffs(coeffs)
    }
}

impl MulAssign for QPoly {
    fn mul_assign(&mut self, rhs: QPoly) {
        *self = self.clone() * rhs;
    }
}

/// Element of the local ring `Q[q]_(q)`: a reduced fraction `num/den` with
/// `den(0) != 0`. This is the scalar for all Smith-form work over the
/// q-adic valuation ring.
#[derive(Clone, PartialEq)]
pub struct LocRat {
    num: QPoly,
    den: QPoly,
}

impl LocRat {
    pub fn new(num: QPoly, den: QPoly) -> Self {
        assert!(den.is_unit(), "LocRat denominator must be a unit at q=0");
        LocRat { num, den }.reduced()
    }

    pub fn from_poly(p: QPoly) -> Self {
        LocRat {
            num: p,
            den: QPoly::one(),
        }
    }

    pub fn num(&self) -> &QPoly {
        &self.num
    }

    pub fn den(&self) -> &QPoly {
        &self.den
    }

    fn reduced(self) -> Self {
        if self.num.is_zero() {
            return LocRat {
                num: QPoly::zero(),
                den: QPoly::one(),
            };
        }
        let g = QPoly::gcd(&self.num, &self.den);
        let (num, den) = if g.degree() == Some(0) {
            (self.num, self.den)
        } else {
            (
                self.num.div_exact(&g).unwrap(),
                self.den.div_exact(&g).unwrap(),
            )
        };
        // normalize: make den(0) = 1
        let c = den.eval_at_zero();
        let cinv = Rat::one() / c;
        LocRat {
            num: num.scale(&cinv),
            den: den.scale(&cinv),
        }
    }

    pub fn valuation(&self) -> Option<usize> {
        self.num.valuation()
    }

    pub fn is_unit(&self) -> bool {
        self.num.is_unit()
    }

    /// Multiplicative inverse; panics unless `self` is a unit.
    pub fn inv_unit(&self) -> Self {
        assert!(self.is_unit(), "inverse of a non-unit in Q[q]_(q)");
        LocRat {
            num: self.den.clone(),
            den: self.num.clone(),
        }
        .reduced()
    }

    /// Exact division when `val(self) >= val(rhs)`.
    pub fn div(&self, rhs: &LocRat) -> Option<LocRat> {
        if rhs.is_zero() {
            return None;
        }
        let va = self.valuation();
        let vb = rhs.valuation().unwrap();
        match va {
            None => Some(LocRat::zero()),
            Some(va) if va >= vb => {
                let num = self.num.clone() * rhs.den.clone();
                let den = self.den.clone() * rhs.num.div_q_pow(vb);
                Some(LocRat::new(num.div_q_pow(vb), den))
            }
            _ => None,
        }
    }

    /// Truncated power-series expansion mod q^k.
    pub fn series(&self, k: usize) -> QPoly {
        // invert den as a series
        let mut inv = vec![Rat::zero(); k];
        let d0 = self.den.eval_at_zero();
        inv[0] = Rat::one() / &d0;
        for j in 1..k {
            let mut acc = Rat::zero();
            for i in 1..=j {
                acc = acc + self.den.coeff(i) * inv[j - i].clone();
            }
            inv[j] = -acc / &d0;
        }
        (self.num.truncate(k) * QPoly::from_coeffs(inv)).truncate(k)
    }
}

impl fmt::Debug for LocRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for LocRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

impl Zero for LocRat {
    fn zero() -> Self {
        LocRat {
            num: QPoly::zero(),
            den: QPoly::one(),
        }
    }
    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
}

impl One for LocRat {
    fn one() -> Self {
        LocRat {
            num: QPoly::one(),
            den: QPoly::one(),
        }
    }
}

impl Add for LocRat {
    type Output = LocRat;
    fn add(self, rhs: LocRat) -> LocRat {
        LocRat::new(
            self.num.clone() * rhs.den.clone() + rhs.num * self.den.clone(),
            self.den * rhs.den,
        )
    }
}

impl Sub for LocRat {
    type Output = LocRat;
    fn sub(self, rhs: LocRat) -> LocRat {
        self + (-rhs)
    }
}

impl Neg for LocRat {
    type Output = LocRat;
    fn neg(self) -> LocRat {
        LocRat {
            num: -self.num,
            den: self.den,
        }
    }
}

impl Mul for LocRat {
    type Output = LocRat;
    fn mul(self, rhs: LocRat) -> LocRat {
        LocRat::new(self.num * rhs.num, self.den * rhs.den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qpoly_arith() {
        let p = QPoly::q() * QPoly::q() + QPoly::one();
        assert_eq!(p.coeff(0), rat(1));
        assert_eq!(p.coeff(2), rat(1));
        assert_eq!(p.valuation(), Some(0));
        assert_eq!((QPoly::q() * QPoly::int(3)).valuation(), Some(1));
        assert!(p.div_exact(&QPoly::q()).is_none());
        let even = QPoly::q() * QPoly::q() - QPoly::one();
        let factor = QPoly::q() - QPoly::one();
        let other = even.div_exact(&factor).unwrap();
        assert_eq!(other, QPoly::q() + QPoly::one());
    }

    #[test]
    fn locrat_series_inverse() {
        // 1/(1+q) = 1 - q + q^2 - ...
        let x = LocRat::new(QPoly::one(), QPoly::one() + QPoly::q());
        let s = x.series(4);
        assert_eq!(s.coeff(0), rat(1));
        assert_eq!(s.coeff(1), rat(-1));
        assert_eq!(s.coeff(2), rat(1));
        assert_eq!(s.coeff(3), rat(-1));
    }

    #[test]
    fn locrat_division() {
        let q = LocRat::from_poly(QPoly::q());
        let q2 = q.clone() * q.clone();
        assert_eq!(q2.div(&q).unwrap(), q);
        assert!(q.div(&q2).is_none());
        let u = LocRat::from_poly(QPoly::one() + QPoly::q());
        assert!(u.is_unit());
        assert_eq!(u.inv_unit() * u, LocRat::one());
    }
}
