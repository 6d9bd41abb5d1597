//! Truncated Laurent series in one variable with tracked precision.
//!
//! A `Series` is zero below `start`, holds explicit coefficients from
//! `start` on, and is unknown from `prec` upwards (`None` means exact).

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{factorial, one, q, zero, Scalar};

#[derive(Clone, PartialEq, Eq)]
pub struct Series {
    start: i64,
    c: Vec<Scalar>,
    prec: Option<i64>,
}

fn min_prec(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (Some(x), None) | (None, Some(x)) => Some(x),
        (None, None) => None,
    }
}

impl Series {
    pub fn new(start: i64, c: Vec<Scalar>, prec: Option<i64>) -> Self {
        let mut s = Series { start, c, prec };
        s.normalize();
        s
    }

    /// Exact finite Laurent polynomial.
    pub fn exact(start: i64, c: Vec<Scalar>) -> Self {
        Series::new(start, c, None)
    }

    /// Known to be zero below `prec`, unknown from there.
    pub fn big_o(prec: i64) -> Self {
        Series::new(prec, vec![], Some(prec))
    }

    pub fn zero() -> Self {
        Series::new(0, vec![], None)
    }

    pub fn one() -> Self {
        Series::exact(0, vec![one()])
    }

    pub fn constant(a: Scalar) -> Self {
        Series::exact(0, vec![a])
    }

    /// The monomial `a t^k`.
    pub fn monomial(a: Scalar, k: i64) -> Self {
        Series::exact(k, vec![a])
    }

    /// The variable `t`.
    pub fn t() -> Self {
        Series::monomial(one(), 1)
    }

    fn normalize(&mut self) {
        if let Some(p) = self.prec {
            let keep = (p - self.start).max(0) as usize;
            if self.c.len() > keep {
                self.c.truncate(keep);
            }
        }
        while self.c.last().is_some_and(|x| x.is_zero()) {
            self.c.pop();
        }
        let lead = self.c.iter().take_while(|x| x.is_zero()).count();
        if lead > 0 {
            self.c.drain(..lead);
            self.start += lead as i64;
        }
        if self.c.is_empty() {
            self.start = self.prec.unwrap_or(0);
        }
    }

    pub fn prec(&self) -> Option<i64> {
        self.prec
    }

    pub fn is_exact(&self) -> bool {
        self.prec.is_none()
    }

    /// True when every known coefficient vanishes.
    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Order of the first nonzero coefficient, if it is known.
    pub fn valuation(&self) -> Option<i64> {
        if self.c.is_empty() {
            None
        } else {
            Some(self.start)
        }
    }

    /// Lower bound for the valuation (the precision for a series that is
    /// zero as far as known).
    pub fn val_bound(&self) -> i64 {
        self.start
    }

    pub fn coeff(&self, k: i64) -> Result<Scalar> {
        if let Some(p) = self.prec {
            if k >= p {
                return Err(Error::InsufficientPrecision(format!(
                    "coefficient {k} requested, series known below {p}"
                )));
            }
        }
        Ok(self.coeff_unchecked(k))
    }

    /// Coefficient, treating unknown orders as zero.
    pub fn coeff_unchecked(&self, k: i64) -> Scalar {
        if k < self.start {
            return zero();
        }
        self.c.get((k - self.start) as usize).cloned().unwrap_or_else(zero)
    }

    /// Known nonzero terms `(order, coeff)`.
    pub fn terms(&self) -> impl Iterator<Item = (i64, &Scalar)> {
        let s = self.start;
        self.c
            .iter()
            .enumerate()
            .filter(|(_, a)| !a.is_zero())
            .map(move |(i, a)| (s + i as i64, a))
    }

    /// Highest order with an explicitly stored coefficient plus one.
    pub fn stored_end(&self) -> i64 {
        self.start + self.c.len() as i64
    }

    /// Forgets everything from order `n` on.
    pub fn truncate(&self, n: i64) -> Series {
        Series::new(self.start, self.c.clone(), min_prec(self.prec, Some(n)))
    }

    /// Multiplies by `t^k`.
    pub fn shift(&self, k: i64) -> Series {
        Series::new(self.start + k, self.c.clone(), self.prec.map(|p| p + k))
    }

    pub fn scale(&self, a: &Scalar) -> Series {
        Series::new(self.start, self.c.iter().map(|x| x * a).collect(), self.prec)
    }

    pub fn derivative(&self) -> Series {
        let c = self
            .c
            .iter()
            .enumerate()
            .map(|(i, a)| a * q(self.start + i as i64))
            .collect();
        Series::new(self.start - 1, c, self.prec.map(|p| p - 1))
    }

    /// Formal antiderivative; errors on a nonzero `t^{-1}` coefficient.
    pub fn integral(&self) -> Result<Series> {
        let mut c = Vec::with_capacity(self.c.len());
        for (i, a) in self.c.iter().enumerate() {
            let k = self.start + i as i64;
            if k == -1 {
                if !a.is_zero() {
                    return Err(Error::InvalidSeries("integral of a series with residue".into()));
                }
                c.push(zero());
            } else {
                c.push(a / q(k + 1));
            }
        }
        Ok(Series::new(self.start + 1, c, self.prec.map(|p| p + 1)))
    }

    /// Multiplicative inverse; `rel` caps the relative precision for exact
    /// inputs.
    pub fn recip(&self, rel: i64) -> Result<Series> {
        let v = self.valuation().ok_or(Error::DivisionByZero)?;
        let r = match self.prec {
            Some(p) => (p - v).min(rel),
            None if self.c.len() == 1 => {
                return Ok(Series::monomial(self.c[0].recip(), -v));
            }
            None => rel,
        };
        let r = r.max(0) as usize;
        let inv0 = self.c[0].recip();
        let mut out: Vec<Scalar> = Vec::with_capacity(r);
        for n in 0..r {
            let mut acc = if n == 0 { one() } else { zero() };
            for k in 1..=n.min(self.c.len() - 1) {
                acc -= &self.c[k] * &out[n - k];
            }
            out.push(acc * &inv0);
        }
        Ok(Series::new(-v, out, Some(-v + r as i64)))
    }

    pub fn div(&self, o: &Series, rel: i64) -> Result<Series> {
        Ok(self * &o.recip(rel)?)
    }

    /// Assigns a finite precision to an exact series.
    pub fn with_prec(&self, n: i64) -> Series {
        self.truncate(n)
    }

    pub fn pow(&self, e: usize) -> Series {
        let mut acc = Series::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// `self(inner)` where `inner` has positive valuation.  Negative
    /// powers of `self` need `inner` of valuation one (handled through
    /// `recip` capped at `rel`).
    pub fn compose(&self, inner: &Series, rel: i64) -> Result<Series> {
        if self.is_zero() {
            return Ok(match self.prec {
                None => Series::zero(),
                Some(p) => {
                    let vg = inner.val_bound();
                    Series::big_o(vg * p)
                }
            });
        }
        let vg = inner
            .valuation()
            .ok_or_else(|| Error::InvalidSeries("composition with zero inner series".into()))?;
        if vg < 1 {
            return Err(Error::InvalidSeries("inner series must have positive valuation".into()));
        }
        let s0 = self.start;
        let mut acc = Series::zero();
        let mut pw = if s0 >= 0 {
            inner.pow(s0 as usize)
        } else {
            inner.recip(rel)?.pow((-s0) as usize)
        };
        for (i, a) in self.c.iter().enumerate() {
            if i > 0 {
                pw = &pw * inner;
            }
            if !a.is_zero() {
                acc = &acc + &pw.scale(a);
            }
        }
        if let Some(p) = self.prec {
            // remaining tail is O(inner^p)
            acc = acc.truncate(vg * p);
        }
        Ok(acc)
    }

    /// Compositional inverse of a series with valuation exactly one, to
    /// precision `n` (Newton iteration).
    pub fn reversion(&self, n: i64) -> Result<Series> {
        if self.valuation() != Some(1) || self.start != 1 {
            return Err(Error::InvalidSeries("reversion needs valuation exactly one".into()));
        }
        if let Some(p) = self.prec {
            if p < n {
                return Err(Error::InsufficientPrecision(format!(
                    "reversion to order {n} needs input known below {n}, have {p}"
                )));
            }
        }
        let a1 = self.c[0].clone();
        let ds = self.derivative();
        let mut r = Series::new(1, vec![a1.recip()], Some(2));
        let mut cur = 2;
        while cur < n {
            cur = (2 * cur).min(n);
            let rr = Series::new(r.start, r.c.clone(), Some(cur));
            let f = &self.truncate(cur).compose(&rr, cur)? - &Series::t();
            let d = ds.truncate(cur).compose(&rr, cur)?;
            let corr = f.div(&d, cur)?;
            r = (&rr - &corr).truncate(cur);
        }
        Ok(r.truncate(n))
    }

    /// `exp(self)` for a series with positive valuation.
    pub fn exp(&self, n: i64) -> Result<Series> {
        if !self.is_zero() && self.start < 1 {
            return Err(Error::InvalidSeries("exp needs positive valuation".into()));
        }
        let n = match self.prec {
            Some(p) => p.min(n),
            None => n,
        }
        .max(0) as usize;
        let mut e: Vec<Scalar> = Vec::with_capacity(n);
        for m in 0..n {
            if m == 0 {
                e.push(one());
                continue;
            }
            let mut acc = zero();
            for k in 1..=m {
                let sk = self.coeff_unchecked(k as i64);
                if !sk.is_zero() {
                    acc += sk * q(k as i64) * &e[m - k];
                }
            }
            e.push(acc / q(m as i64));
        }
        Ok(Series::new(0, e, Some(n as i64)))
    }

    /// `log(self)` for a series with constant term one.
    pub fn log(&self, n: i64) -> Result<Series> {
        if self.start != 0 || self.c.is_empty() || self.c[0] != one() {
            return Err(Error::InvalidSeries("log needs constant term one".into()));
        }
        let n = match self.prec {
            Some(p) => p.min(n),
            None => n,
        }
        .max(0) as usize;
        let mut l: Vec<Scalar> = vec![zero(); n];
        for m in 1..n {
            let mut acc = self.coeff_unchecked(m as i64) * q(m as i64);
            for (k, lk) in l.iter().enumerate().take(m).skip(1) {
                let s = self.coeff_unchecked((m - k) as i64);
                if !s.is_zero() {
                    acc -= q(k as i64) * lk * s;
                }
            }
            l[m] = acc / q(m as i64);
        }
        Ok(Series::new(0, l, Some(n as i64)))
    }

    /// Square root of a series with constant term one.
    pub fn sqrt(&self, n: i64) -> Result<Series> {
        if self.start != 0 || self.c.is_empty() || self.c[0] != one() {
            return Err(Error::InvalidSeries("sqrt needs constant term one".into()));
        }
        let n = match self.prec {
            Some(p) => p.min(n),
            None => n,
        }
        .max(0) as usize;
        let mut r: Vec<Scalar> = Vec::with_capacity(n);
        for m in 0..n {
            if m == 0 {
                r.push(one());
                continue;
            }
            let mut acc = self.coeff_unchecked(m as i64);
            for k in 1..m {
                acc -= &r[k] * &r[m - k];
            }
            r.push(acc / q(2));
        }
        Ok(Series::new(0, r, Some(n as i64)))
    }

    /// Coefficient of `t^{-1}`.
    pub fn residue(&self) -> Result<Scalar> {
        self.coeff(-1)
    }

    pub fn window(&self, point: Point, low: i64, high: i64) -> Result<LaurentWindow> {
        if high < low {
            return Err(Error::InvalidArgument(format!("empty window [{low},{high}]")));
        }
        if let Some(p) = self.prec {
            if high >= p {
                return Err(Error::InsufficientPrecision(format!(
                    "window up to {high} but series known below {p}"
                )));
            }
        }
        Ok(LaurentWindow {
            point,
            low,
            high,
            coeffs: (low..=high).map(|k| self.coeff_unchecked(k)).collect(),
        })
    }
}

impl fmt::Debug for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.terms().map(|(k, a)| format!("{a}*t^{k}")).collect();
        if parts.is_empty() {
            parts.push("0".into());
        }
        match self.prec {
            Some(p) => write!(f, "{} + O(t^{p})", parts.join(" + ")),
            None => write!(f, "{}", parts.join(" + ")),
        }
    }
}

impl Add for &Series {
    type Output = Series;
    fn add(self, o: &Series) -> Series {
        let prec = min_prec(self.prec, o.prec);
        if self.c.is_empty() && o.c.is_empty() {
            return Series::new(0, vec![], prec);
        }
        let lo = match (self.c.is_empty(), o.c.is_empty()) {
            (true, _) => o.start,
            (_, true) => self.start,
            _ => self.start.min(o.start),
        };
        let mut hi = self.stored_end().max(o.stored_end());
        if let Some(p) = prec {
            hi = hi.min(p);
        }
        let c = (lo..hi.max(lo))
            .map(|k| self.coeff_unchecked(k) + o.coeff_unchecked(k))
            .collect();
        Series::new(lo, c, prec)
    }
}

impl Neg for &Series {
    type Output = Series;
    fn neg(self) -> Series {
        Series::new(self.start, self.c.iter().map(|a| -a).collect(), self.prec)
    }
}

impl Sub for &Series {
    type Output = Series;
    fn sub(self, o: &Series) -> Series {
        self + &(-o)
    }
}

impl Mul for &Series {
    type Output = Series;
    fn mul(self, o: &Series) -> Series {
        let prec = match (self.prec, o.prec) {
            (None, None) => None,
            (Some(pa), None) => Some(pa + o.start),
            (None, Some(pb)) => Some(pb + self.start),
            (Some(pa), Some(pb)) => Some((pa + o.start).min(pb + self.start)),
        };
        if self.c.is_empty() || o.c.is_empty() {
            return Series::new(0, vec![], prec);
        }
        let start = self.start + o.start;
        let mut len = self.c.len() + o.c.len() - 1;
        if let Some(p) = prec {
            len = len.min((p - start).max(0) as usize);
        }
        let out = convolve(&self.c, &o.c, len);
        Series::new(start, out, prec)
    }
}

impl Add for Series {
    type Output = Series;
    fn add(self, o: Series) -> Series {
        &self + &o
    }
}

impl Sub for Series {
    type Output = Series;
    fn sub(self, o: Series) -> Series {
        &self - &o
    }
}

impl Mul for Series {
    type Output = Series;
    fn mul(self, o: Series) -> Series {
        &self * &o
    }
}

impl Neg for Series {
    type Output = Series;
    fn neg(self) -> Series {
        -&self
    }
}

/// Common denominator and integer numerators of a coefficient list.
fn integerize(c: &[Scalar]) -> (BigInt, Vec<BigInt>) {
    let mut l = BigInt::one();
    for x in c {
        if !x.denom().is_one() {
            l = l.lcm(x.denom());
        }
    }
    let nums = c.iter().map(|x| x.numer() * (&l / x.denom())).collect();
    (l, nums)
}

/// First `len` coefficients of the product, using integer arithmetic with
/// one normalization per output coefficient.
fn convolve(a: &[Scalar], b: &[Scalar], len: usize) -> Vec<Scalar> {
    if len == 0 {
        return vec![];
    }
    let la = a.len().min(len);
    let lb = b.len().min(len);
    let (da, na) = integerize(&a[..la]);
    let (db, nb) = integerize(&b[..lb]);
    let den = da * db;
    (0..len)
        .map(|k| {
            let mut acc = BigInt::zero();
            let lo = k.saturating_sub(lb - 1);
            for i in lo..=k.min(la - 1) {
                let (x, y) = (&na[i], &nb[k - i]);
                if !x.is_zero() && !y.is_zero() {
                    acc += x * y;
                }
            }
            Scalar::new(acc, den.clone())
        })
        .collect()
}

/// Expansion point: finite or infinity.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Point {
    Finite(Scalar),
    Infinity,
}

/// Coefficients of `(z-p)^k` (or `z^{-k}` at infinity) for `low <= k <= high`;
/// everything outside the window is unknown.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LaurentWindow {
    pub point: Point,
    pub low: i64,
    pub high: i64,
    pub coeffs: Vec<Scalar>,
}

impl LaurentWindow {
    pub fn get(&self, k: i64) -> Result<Scalar> {
        if k < self.low || k > self.high {
            return Err(Error::InsufficientPrecision(format!(
                "order {k} outside window [{},{}]",
                self.low, self.high
            )));
        }
        Ok(self.coeffs[(k - self.low) as usize].clone())
    }

    pub fn residue(&self) -> Result<Scalar> {
        self.get(-1)
    }

    fn combine(&self, o: &LaurentWindow, f: impl Fn(&Scalar, &Scalar) -> Scalar) -> Result<LaurentWindow> {
        if self.point != o.point {
            return Err(Error::InvalidArgument("windows at different points".into()));
        }
        let low = self.low.max(o.low);
        let high = self.high.min(o.high);
        if high < low {
            return Err(Error::InsufficientPrecision("disjoint windows".into()));
        }
        let coeffs = (low..=high).map(|k| f(&self.get(k).unwrap(), &o.get(k).unwrap())).collect();
        Ok(LaurentWindow { point: self.point.clone(), low, high, coeffs })
    }

    pub fn add(&self, o: &LaurentWindow) -> Result<LaurentWindow> {
        self.combine(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &LaurentWindow) -> Result<LaurentWindow> {
        self.combine(o, |a, b| a - b)
    }

    /// Product of two windows.  A window only determines a product
    /// coefficient when the lower tail is known to vanish, so both inputs
    /// must start at a known valuation: callers pass windows whose `low`
    /// is at or below the true valuation.
    pub fn mul(&self, o: &LaurentWindow) -> Result<LaurentWindow> {
        if self.point != o.point {
            return Err(Error::InvalidArgument("windows at different points".into()));
        }
        let low = self.low + o.low;
        let high = (self.high + o.low).min(o.high + self.low);
        let mut coeffs = vec![zero(); (high - low + 1).max(0) as usize];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                let k = i + j;
                if k < coeffs.len() {
                    coeffs[k] += a * b;
                }
            }
        }
        Ok(LaurentWindow { point: self.point.clone(), low, high, coeffs })
    }
}

/// 𝒮(u) = (e^{u/2} - e^{-u/2})/u and its reciprocal, both known below
/// order `n + 1`.
pub fn sfun_series(n: usize) -> (Series, Series) {
    let len = n + 1;
    let c: Vec<Scalar> = (0..len)
        .map(|k| {
            if k % 2 == 1 {
                zero()
            } else {
                // coefficient of u^k is 1/(2^k (k+1)!)
                one() / (factorial(k + 1) * q(1i64 << k.min(62)))
            }
        })
        .collect();
    let s = Series::new(0, c, Some(len as i64));
    let inv = s.recip(len as i64).expect("S(0) = 1");
    (s, inv)
}

/// Coefficient of `u^{2k}` in 1/𝒮(u) for k = 0..=m.
pub fn inv_sfun_coeffs(m: usize) -> Vec<Scalar> {
    let (_, inv) = sfun_series(2 * m);
    (0..=m).map(|k| inv.coeff_unchecked(2 * k as i64)).collect()
}

/// Coefficient of `u^{2k}` in 𝒮(u) for k = 0..=m.
pub fn sfun_coeffs(m: usize) -> Vec<Scalar> {
    let (s, _) = sfun_series(2 * m);
    (0..=m).map(|k| s.coeff_unchecked(2 * k as i64)).collect()
}
