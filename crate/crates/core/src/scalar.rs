//! Exact rationals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Scalar = BigRational;

pub fn q(n: i64) -> Scalar {
    BigRational::from_integer(BigInt::from(n))
}

pub fn qr(n: i64, d: i64) -> Scalar {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn zero() -> Scalar {
    Scalar::zero()
}

pub fn one() -> Scalar {
    Scalar::one()
}

/// Parses `"p/q"` or `"p"`; anything that looks like a float is rejected.
pub fn parse_scalar(s: &str) -> Result<Scalar> {
    let t = s.trim();
    if t.is_empty() {
        return Err(Error::Parse("empty rational".into()));
    }
    if t.contains(['.', 'e', 'E']) {
        return Err(Error::Parse(format!("not an exact rational: {t:?}")));
    }
    let (n, d) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let n: BigInt = n.parse().map_err(|_| Error::Parse(format!("bad numerator in {t:?}")))?;
    let d: BigInt = d.parse().map_err(|_| Error::Parse(format!("bad denominator in {t:?}")))?;
    if d.is_zero() {
        return Err(Error::Parse(format!("zero denominator in {t:?}")));
    }
    Ok(BigRational::new(n, d))
}

/// Canonical text form: `"p/q"` with q > 0, or `"p"` when q = 1.
pub fn fmt_scalar(x: &Scalar) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn factorial(n: usize) -> Scalar {
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= BigInt::from(k);
    }
    BigRational::from_integer(acc)
}

pub fn binomial(n: i64, k: i64) -> Scalar {
    if k < 0 {
        return zero();
    }
    // generalized binomial, n may be negative
    let mut acc = one();
    for i in 0..k {
        acc = acc * q(n - i) / q(i + 1);
    }
    acc
}

pub fn pow(x: &Scalar, e: i64) -> Scalar {
    if e >= 0 {
        num_traits::pow(x.clone(), e as usize)
    } else {
        num_traits::pow(x.recip(), (-e) as usize)
    }
}

pub fn is_integer(x: &Scalar) -> bool {
    x.denom().is_one()
}

pub fn abs(x: &Scalar) -> Scalar {
    x.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        assert_eq!(parse_scalar("6/4").unwrap(), qr(3, 2));
        assert_eq!(fmt_scalar(&qr(-3, 6)), "-1/2");
        assert_eq!(fmt_scalar(&q(5)), "5");
        assert_eq!(parse_scalar(" -7 ").unwrap(), q(-7));
    }

    #[test]
    fn floats_rejected() {
        assert!(parse_scalar("0.5").is_err());
        assert!(parse_scalar("1e3").is_err());
        assert!(parse_scalar("1/0").is_err());
        assert!(parse_scalar("x").is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), q(10));
        assert_eq!(binomial(-2, 3), q(-4));
        assert_eq!(factorial(5), q(120));
    }
}
