//! Dense univariate polynomials over the rationals.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::scalar::{one, q, zero, Scalar};

/// Coefficients in ascending degree, no trailing zeros.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    c: Vec<Scalar>,
}

impl Poly {
    pub fn new(mut c: Vec<Scalar>) -> Self {
        while c.last().is_some_and(|x| x.is_zero()) {
            c.pop();
        }
        Poly { c }
    }

    pub fn zero() -> Self {
        Poly { c: vec![] }
    }

    pub fn constant(a: Scalar) -> Self {
        Poly::new(vec![a])
    }

    pub fn one() -> Self {
        Poly::constant(one())
    }

    /// The monomial `z`.
    pub fn z() -> Self {
        Poly::new(vec![zero(), one()])
    }

    /// `z - a`
    pub fn linear(a: &Scalar) -> Self {
        Poly::new(vec![-a.clone(), one()])
    }

    pub fn from_ints(c: &[i64]) -> Self {
        Poly::new(c.iter().map(|&x| q(x)).collect())
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.c
    }

    pub fn coeff(&self, k: usize) -> Scalar {
        self.c.get(k).cloned().unwrap_or_else(zero)
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Degree, with `-1` for the zero polynomial.
    pub fn degree(&self) -> i64 {
        self.c.len() as i64 - 1
    }

    pub fn lead(&self) -> Scalar {
        self.c.last().cloned().unwrap_or_else(zero)
    }

    pub fn scale(&self, a: &Scalar) -> Poly {
        Poly::new(self.c.iter().map(|x| x * a).collect())
    }

    pub fn monic(&self) -> Poly {
        if self.is_zero() {
            return self.clone();
        }
        let l = self.lead().recip();
        self.scale(&l)
    }

    pub fn eval(&self, z: &Scalar) -> Scalar {
        let mut acc = zero();
        for a in self.c.iter().rev() {
            acc = acc * z + a;
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, a)| a * q(k as i64))
                .collect(),
        )
    }

    pub fn pow(&self, e: usize) -> Poly {
        let mut acc = Poly::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn divrem(&self, d: &Poly) -> (Poly, Poly) {
        assert!(!d.is_zero(), "polynomial division by zero");
        let mut r = self.c.clone();
        let dd = d.c.len();
        if r.len() < dd {
            return (Poly::zero(), self.clone());
        }
        let inv = d.lead().recip();
        let mut quo = vec![zero(); r.len() - dd + 1];
        for k in (0..quo.len()).rev() {
            let f = &r[k + dd - 1] * &inv;
            if !f.is_zero() {
                for (j, dj) in d.c.iter().enumerate() {
                    r[k + j] -= &f * dj;
                }
            }
            quo[k] = f;
        }
        r.truncate(dd - 1);
        (Poly::new(quo), Poly::new(r))
    }

    pub fn gcd(a: &Poly, b: &Poly) -> Poly {
        let (mut a, mut b) = (a.clone(), b.clone());
        while !b.is_zero() {
            let (_, r) = a.divrem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Substitutes a polynomial for the variable.
    pub fn compose(&self, inner: &Poly) -> Poly {
        let mut acc = Poly::zero();
        for a in self.c.iter().rev() {
            acc = &(&acc * inner) + &Poly::constant(a.clone());
        }
        acc
    }

    /// Taylor shift: coefficients of `p(a + t)` in `t`.
    pub fn shift(&self, a: &Scalar) -> Poly {
        self.compose(&Poly::new(vec![a.clone(), one()]))
    }

    /// Multiplicity of the root `a`.
    pub fn root_multiplicity(&self, a: &Scalar) -> usize {
        if self.is_zero() {
            return usize::MAX;
        }
        let s = self.shift(a);
        s.c.iter().take_while(|x| x.is_zero()).count()
    }

    /// Distinct rational roots with multiplicities, and the cofactor
    /// carrying no rational roots.
    pub fn rational_roots(&self) -> (Vec<(Scalar, usize)>, Poly) {
        let mut rest = self.monic();
        let mut roots: Vec<(Scalar, usize)> = Vec::new();
        if rest.degree() <= 0 {
            return (roots, rest);
        }
        // zero root
        let m0 = rest.c.iter().take_while(|x| x.is_zero()).count();
        if m0 > 0 {
            roots.push((zero(), m0));
            rest = Poly::new(rest.c[m0..].to_vec());
        }
        // clear denominators
        let mut lcm = BigInt::one();
        for a in &rest.c {
            lcm = lcm.lcm(a.denom());
        }
        let ints: Vec<BigInt> = rest
            .c
            .iter()
            .map(|a| (a * Scalar::from_integer(lcm.clone())).to_integer())
            .collect();
        if ints.len() > 1 {
            let a0 = ints[0].abs();
            let an = ints.last().unwrap().abs();
            let pd = small_divisors(&a0);
            let qd = small_divisors(&an);
            let mut cands: Vec<Scalar> = Vec::new();
            for p in &pd {
                for qq in &qd {
                    let r = Scalar::new(p.clone(), qq.clone());
                    if !cands.contains(&r) {
                        cands.push(r.clone());
                        cands.push(-r);
                    }
                }
            }
            for r in cands {
                let m = rest.root_multiplicity(&r);
                if m > 0 {
                    for _ in 0..m {
                        rest = rest.divrem(&Poly::linear(&r)).0;
                    }
                    roots.push((r, m));
                }
            }
        }
        roots.sort_by(|a, b| a.0.cmp(&b.0));
        (roots, rest)
    }
}

fn small_divisors(n: &BigInt) -> Vec<BigInt> {
    use num_traits::ToPrimitive;
    let v = n.to_u64().expect("coefficient too large for rational root search");
    let mut out = Vec::new();
    let mut d = 1u64;
    while d * d <= v {
        if v.is_multiple_of(d) {
            out.push(BigInt::from(d));
            if d * d != v {
                out.push(BigInt::from(v / d));
            }
        }
        d += 1;
    }
    out
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .c
            .iter()
            .enumerate()
            .filter(|(_, a)| !a.is_zero())
            .map(|(k, a)| match k {
                0 => format!("{a}"),
                1 => format!("{a}*z"),
                _ => format!("{a}*z^{k}"),
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, o: &Poly) -> Poly {
        let n = self.c.len().max(o.c.len());
        Poly::new((0..n).map(|k| self.coeff(k) + o.coeff(k)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, o: &Poly) -> Poly {
        let n = self.c.len().max(o.c.len());
        Poly::new((0..n).map(|k| self.coeff(k) - o.coeff(k)).collect())
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly::new(self.c.iter().map(|a| -a).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![zero(); self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.c.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(self, o: Poly) -> Poly {
        &self + &o
    }
}

impl Sub for Poly {
    type Output = Poly;
    fn sub(self, o: Poly) -> Poly {
        &self - &o
    }
}

impl Mul for Poly {
    type Output = Poly;
    fn mul(self, o: Poly) -> Poly {
        &self * &o
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::qr;

    #[test]
    fn division_and_gcd() {
        let a = Poly::from_ints(&[-1, 0, 1]); // z^2 - 1
        let b = Poly::from_ints(&[-1, 1]);
        let (qq, r) = a.divrem(&b);
        assert_eq!(qq, Poly::from_ints(&[1, 1]));
        assert!(r.is_zero());
        let g = Poly::gcd(&a, &Poly::from_ints(&[1, 2, 1]));
        assert_eq!(g, Poly::from_ints(&[1, 1]));
    }

    #[test]
    fn roots_of_quadratic() {
        // 3z^2 + 14z + 8 = (3z + 2)(z + 4)
        let p = Poly::from_ints(&[8, 14, 3]);
        let (roots, rest) = p.rational_roots();
        assert_eq!(roots, vec![(q(-4), 1), (qr(-2, 3), 1)]);
        assert_eq!(rest.degree(), 0);
        let irr = Poly::from_ints(&[-1, 0, 2]);
        let (roots, rest) = irr.rational_roots();
        assert!(roots.is_empty());
        assert_eq!(rest.degree(), 2);
    }

    #[test]
    fn multiple_roots() {
        let p = Poly::from_ints(&[0, 0, 1]).mul(Poly::from_ints(&[-1, 1]));
        let (roots, _) = p.rational_roots();
        assert_eq!(roots, vec![(q(0), 2), (q(1), 1)]);
    }

    #[test]
    fn shift_and_eval() {
        let p = Poly::from_ints(&[1, 2, 3]);
        let s = p.shift(&q(2));
        assert_eq!(s.eval(&q(0)), p.eval(&q(2)));
        assert_eq!(s.eval(&q(1)), p.eval(&q(3)));
        assert_eq!(p.derivative(), Poly::from_ints(&[2, 6]));
    }
}
