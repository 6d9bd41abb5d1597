//! Rational functions in canonical form.

use std::fmt;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::scalar::{one, q, zero, Scalar};
use crate::series::{LaurentWindow, Point, Series};

/// `num/den` with `gcd(num, den) = 1` and `den` monic.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalFunction {
    num: Poly,
    den: Poly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RfOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// `(q, d, c)` standing for `c/(z-q)^d`.
pub type PartialFraction = (Scalar, usize, Scalar);

impl RationalFunction {
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if num.is_zero() {
            return Ok(RationalFunction::zero());
        }
        let g = Poly::gcd(&num, &den);
        let (mut n, _) = num.divrem(&g);
        let (mut d, _) = den.divrem(&g);
        let l = d.lead();
        if l != one() {
            let inv = l.recip();
            n = n.scale(&inv);
            d = d.scale(&inv);
        }
        Ok(RationalFunction { num: n, den: d })
    }

    pub fn from_poly(p: Poly) -> Self {
        RationalFunction { num: p, den: Poly::one() }
    }

    pub fn zero() -> Self {
        RationalFunction { num: Poly::zero(), den: Poly::one() }
    }

    pub fn one() -> Self {
        RationalFunction::constant(one())
    }

    pub fn constant(a: Scalar) -> Self {
        RationalFunction::from_poly(Poly::constant(a))
    }

    pub fn z() -> Self {
        RationalFunction::from_poly(Poly::z())
    }

    /// `c/(z-a)^d`
    pub fn pole(a: &Scalar, d: usize, c: Scalar) -> Self {
        RationalFunction { num: Poly::constant(c), den: Poly::linear(a).pow(d) }.canon()
    }

    fn canon(self) -> Self {
        RationalFunction::new(self.num, self.den).expect("nonzero denominator")
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.degree() == 0
    }

    pub fn arith(&self, o: &RationalFunction, op: RfOp) -> Result<RationalFunction> {
        match op {
            RfOp::Add => Ok(self.add(o)),
            RfOp::Sub => Ok(self.sub(o)),
            RfOp::Mul => Ok(self.mul(o)),
            RfOp::Div => self.div(o),
        }
    }

    pub fn add(&self, o: &RationalFunction) -> RationalFunction {
        if self.den == o.den {
            return RationalFunction::new(&self.num + &o.num, self.den.clone()).unwrap();
        }
        RationalFunction::new(&(&self.num * &o.den) + &(&o.num * &self.den), &self.den * &o.den).unwrap()
    }

    pub fn neg(&self) -> RationalFunction {
        RationalFunction { num: -&self.num, den: self.den.clone() }
    }

    pub fn sub(&self, o: &RationalFunction) -> RationalFunction {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &RationalFunction) -> RationalFunction {
        RationalFunction::new(&self.num * &o.num, &self.den * &o.den).unwrap()
    }

    pub fn div(&self, o: &RationalFunction) -> Result<RationalFunction> {
        if o.is_zero() {
            return Err(Error::DivisionByZero);
        }
        RationalFunction::new(&self.num * &o.den, &self.den * &o.num)
    }

    pub fn recip(&self) -> Result<RationalFunction> {
        RationalFunction::one().div(self)
    }

    pub fn scale(&self, a: &Scalar) -> RationalFunction {
        if a.is_zero() {
            return RationalFunction::zero();
        }
        RationalFunction { num: self.num.scale(a), den: self.den.clone() }
    }

    pub fn pow(&self, e: i64) -> Result<RationalFunction> {
        let base = if e < 0 { self.recip()? } else { self.clone() };
        let k = e.unsigned_abs() as usize;
        Ok(RationalFunction { num: base.num.pow(k), den: base.den.pow(k) }.canon())
    }

    pub fn derivative(&self) -> RationalFunction {
        let n = &(&self.num.derivative() * &self.den) - &(&self.num * &self.den.derivative());
        RationalFunction::new(n, &self.den * &self.den).unwrap()
    }

    pub fn eval(&self, z: &Scalar) -> Result<Scalar> {
        let d = self.den.eval(z);
        if d.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(self.num.eval(z) / d)
    }

    /// Substitutes `inner` for the variable.
    pub fn compose(&self, inner: &RationalFunction) -> RationalFunction {
        // p(n/d) = sum a_k n^k d^{N-k} / d^N with N = max degree
        let nd = self.num.degree().max(self.den.degree()).max(0) as usize;
        let hom = |p: &Poly| -> Poly {
            let mut acc = Poly::zero();
            for (k, a) in p.coeffs().iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                let t = &inner.num.pow(k) * &inner.den.pow(nd - k);
                acc = &acc + &t.scale(a);
            }
            acc
        };
        RationalFunction::new(hom(&self.num), hom(&self.den)).unwrap()
    }

    /// Order of vanishing at a finite point (negative for poles).
    pub fn order_at(&self, a: &Scalar) -> i64 {
        if self.is_zero() {
            return i64::MAX;
        }
        self.num.root_multiplicity(a) as i64 - self.den.root_multiplicity(a) as i64
    }

    /// Order of vanishing at infinity in the coordinate `1/z`.
    pub fn order_at_infinity(&self) -> i64 {
        if self.is_zero() {
            return i64::MAX;
        }
        self.den.degree() - self.num.degree()
    }

    /// Laurent expansion at `p` (finite: in `t = z - p`; infinity: in
    /// `w = 1/z`), known below order `prec`.
    pub fn laurent(&self, p: &Point, prec: i64) -> Series {
        if self.is_zero() {
            return Series::big_o(prec);
        }
        let (n, d) = match p {
            Point::Finite(a) => (self.num.shift(a), self.den.shift(a)),
            Point::Infinity => {
                let m = self.num.degree().max(self.den.degree()) as usize;
                (reverse_pad(&self.num, m), reverse_pad(&self.den, m))
            }
        };
        let ns = Series::exact(0, n.coeffs().to_vec());
        let ds = Series::exact(0, d.coeffs().to_vec());
        let v = ns.valuation().unwrap() - ds.valuation().unwrap();
        let rel = (prec - v).max(0);
        ns.div(&ds, rel).expect("nonzero denominator").truncate(prec)
    }

    pub fn series_expand(&self, p: &Point, low: i64, high: i64) -> Result<LaurentWindow> {
        self.laurent(p, high + 1).window(p.clone(), low, high)
    }

    /// Partial fractions over the rational roots of the denominator:
    /// polynomial part and `(q, d, c)` meaning `c/(z-q)^d`.
    pub fn apart(&self) -> Result<(Poly, Vec<PartialFraction>)> {
        let (poly, rem) = self.num.divrem(&self.den);
        let (roots, rest) = self.den.rational_roots();
        if rest.degree() > 0 {
            return Err(Error::UnsupportedCurve(format!(
                "denominator {:?} does not split over the rationals",
                self.den
            )));
        }
        let r = RationalFunction::new(rem, self.den.clone())?;
        let mut terms = Vec::new();
        for (a, m) in roots {
            let s = r.laurent(&Point::Finite(a.clone()), 0);
            for d in 1..=m {
                let c = s.coeff_unchecked(-(d as i64));
                if !c.is_zero() {
                    terms.push((a.clone(), d, c));
                }
            }
        }
        Ok((poly, terms))
    }

    /// Finite poles with their orders.
    pub fn poles(&self) -> Result<Vec<(Scalar, usize)>> {
        let (roots, rest) = self.den.rational_roots();
        if rest.degree() > 0 {
            return Err(Error::UnsupportedCurve(format!(
                "denominator {:?} has irrational roots",
                self.den
            )));
        }
        Ok(roots)
    }
}

fn reverse_pad(p: &Poly, m: usize) -> Poly {
    let mut c = vec![zero(); m + 1];
    for (k, a) in p.coeffs().iter().enumerate() {
        c[m - k] = a.clone();
    }
    Poly::new(c)
}

impl fmt::Debug for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.degree() == 0 {
            write!(f, "{:?}", self.num)
        } else {
            write!(f, "({:?})/({:?})", self.num, self.den)
        }
    }
}

impl From<Scalar> for RationalFunction {
    fn from(a: Scalar) -> Self {
        RationalFunction::constant(a)
    }
}

impl From<i64> for RationalFunction {
    fn from(a: i64) -> Self {
        RationalFunction::constant(q(a))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::qr;

    fn rf(n: &[i64], d: &[i64]) -> RationalFunction {
        RationalFunction::new(Poly::from_ints(n), Poly::from_ints(d)).unwrap()
    }

    #[test]
    fn canonical_form() {
        let a = rf(&[0, 2], &[-2, 2]);
        assert_eq!(a.den(), &Poly::from_ints(&[-1, 1]));
        assert!(a.sub(&a).is_zero());
        // (1 - 1/z) * z/(z-1) = 1
        let dx = rf(&[-1, 1], &[0, 1]);
        let inv = rf(&[0, 1], &[-1, 1]);
        assert_eq!(dx.mul(&inv), RationalFunction::one());
        assert!(dx.div(&RationalFunction::zero()).is_err());
    }

    #[test]
    fn partial_fractions() {
        let f = rf(&[1], &[-1, 0, 1]);
        let (p, terms) = f.apart().unwrap();
        assert!(p.is_zero());
        assert_eq!(terms, vec![(q(-1), 1, qr(-1, 2)), (q(1), 1, qr(1, 2))]);
        let back = RationalFunction::pole(&q(1), 1, qr(1, 2)).add(&RationalFunction::pole(&q(-1), 1, qr(-1, 2)));
        assert_eq!(back, f);
    }

    #[test]
    fn expansions() {
        let inv_z = rf(&[1], &[0, 1]);
        let w = inv_z.series_expand(&Point::Finite(q(0)), -2, 1).unwrap();
        assert_eq!(w.coeffs, vec![q(0), q(1), q(0), q(0)]);
        let dx = rf(&[-1, 1], &[0, 1]);
        let w = dx.series_expand(&Point::Finite(q(1)), 0, 2).unwrap();
        assert_eq!(w.coeffs, vec![q(0), q(1), q(-1)]);
        let f = rf(&[0, 1], &[-1, 1]);
        let w = f.series_expand(&Point::Infinity, 0, 2).unwrap();
        assert_eq!(w.coeffs, vec![q(1), q(1), q(1)]);
    }

    #[test]
    fn composition() {
        let f = rf(&[1], &[0, 1]);
        let inner = RationalFunction::from_poly(Poly::from_ints(&[1, 1]));
        assert_eq!(f.compose(&inner), rf(&[1], &[1, 1]));
        let inv = rf(&[1], &[0, 1]);
        assert_eq!(inv.compose(&inv), RationalFunction::z());
    }
}
