//! Symmetric multidifferentials on the sphere in the pole basis
//! `η_{q,d}(z) = dz/(z-q)^d`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::ratfunc::RationalFunction;
use crate::scalar::{binomial, pow, q, zero, Scalar};
use crate::series::Point;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PoleForm {
    pub q: Scalar,
    pub d: u32,
}

impl PoleForm {
    pub fn new(q: Scalar, d: u32) -> Self {
        PoleForm { q, d }
    }

    /// Coefficient of `dz` at a point away from `q`.
    pub fn eval(&self, z: &Scalar) -> Result<Scalar> {
        let w = z - &self.q;
        if w.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(pow(&w, -(self.d as i64)))
    }

    /// Coefficients of `(z-p)^k`, `low <= k <= high`.
    pub fn expand(&self, p: &Scalar, low: i64, high: i64) -> Vec<Scalar> {
        let d = self.d as i64;
        if *p == self.q {
            return (low..=high).map(|k| if k == -d { q(1) } else { zero() }).collect();
        }
        // (p - q + t)^{-d} = (p-q)^{-d} Σ binom(-d, k) (t/(p-q))^k
        let c = p - &self.q;
        (low..=high)
            .map(|k| if k < 0 { zero() } else { binomial(-d, k) * pow(&c, -d - k) })
            .collect()
    }
}

impl fmt::Debug for PoleForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "dz/(z-{})^{}", self.q, self.d)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Tr,
    LogTr,
    Dual,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Tr => "tr",
            Mode::LogTr => "logtr",
            Mode::Dual => "dual",
        }
    }
}

/// `Σ c ∏_i η_{q_i,d_i}(z_i)` with slots in order.
#[derive(Clone, PartialEq, Eq)]
pub struct FactorizedDifferential {
    pub g: u32,
    pub n: usize,
    pub mode: Mode,
    terms: BTreeMap<Vec<PoleForm>, Scalar>,
}

impl FactorizedDifferential {
    pub fn new(g: u32, n: usize, mode: Mode) -> Self {
        FactorizedDifferential { g, n, mode, terms: BTreeMap::new() }
    }

    pub fn from_terms(g: u32, n: usize, mode: Mode, terms: impl IntoIterator<Item = (Vec<PoleForm>, Scalar)>) -> Result<Self> {
        let mut f = FactorizedDifferential::new(g, n, mode);
        for (k, c) in terms {
            f.add_term(k, c)?;
        }
        Ok(f)
    }

    pub fn add_term(&mut self, key: Vec<PoleForm>, c: Scalar) -> Result<()> {
        if key.len() != self.n {
            return Err(Error::InvalidArgument(format!("term of arity {} in a {}-form", key.len(), self.n)));
        }
        if key.iter().any(|p| p.d == 0) {
            return Err(Error::InvalidArgument("pole order must be positive".into()));
        }
        if c.is_zero() {
            return Ok(());
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(key) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
        Ok(())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<PoleForm>, &Scalar)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, key: &[PoleForm]) -> Scalar {
        self.terms.get(key).cloned().unwrap_or_else(zero)
    }

    pub fn add(&self, o: &FactorizedDifferential) -> Result<FactorizedDifferential> {
        if self.n != o.n {
            return Err(Error::InvalidArgument("arity mismatch".into()));
        }
        let mut r = self.clone();
        for (k, c) in &o.terms {
            r.add_term(k.clone(), c.clone())?;
        }
        Ok(r)
    }

    pub fn scale(&self, a: &Scalar) -> FactorizedDifferential {
        let mut r = FactorizedDifferential::new(self.g, self.n, self.mode);
        if a.is_zero() {
            return r;
        }
        r.terms = self.terms.iter().map(|(k, c)| (k.clone(), c * a)).collect();
        r
    }

    pub fn sub(&self, o: &FactorizedDifferential) -> Result<FactorizedDifferential> {
        self.add(&o.scale(&q(-1)))
    }

    pub fn with_tag(mut self, g: u32, mode: Mode) -> Self {
        self.g = g;
        self.mode = mode;
        self
    }

    pub fn max_pole_order(&self) -> u32 {
        self.terms.keys().flat_map(|k| k.iter().map(|p| p.d)).max().unwrap_or(0)
    }

    /// Distinct pole locations over all slots.
    pub fn pole_points(&self) -> Vec<Scalar> {
        let mut v: Vec<Scalar> = self.terms.keys().flat_map(|k| k.iter().map(|p| p.q.clone())).collect();
        v.sort();
        v.dedup();
        v
    }

    /// Highest pole order at `p` in any slot.
    pub fn pole_order_at(&self, p: &Scalar) -> u32 {
        self.terms
            .keys()
            .flat_map(|k| k.iter().filter(|f| &f.q == p).map(|f| f.d))
            .max()
            .unwrap_or(0)
    }

    /// True when no slot carries a simple pole.
    pub fn is_residue_free(&self) -> bool {
        self.terms.keys().all(|k| k.iter().all(|p| p.d >= 2))
    }

    /// Coefficient of `dz_1 ... dz_n` at the given point.
    pub fn evaluate(&self, z: &[Scalar]) -> Result<Scalar> {
        if z.len() != self.n {
            return Err(Error::InvalidArgument("wrong number of arguments".into()));
        }
        let mut acc = zero();
        for (k, c) in &self.terms {
            let mut t = c.clone();
            for (f, zi) in k.iter().zip(z) {
                t *= f.eval(zi)?;
            }
            acc += t;
        }
        Ok(acc)
    }

    pub fn check_symmetry(&self) -> bool {
        if self.n < 2 {
            return true;
        }
        for (k, c) in &self.terms {
            for i in 0..self.n - 1 {
                let mut sw = k.clone();
                sw.swap(i, i + 1);
                if self.terms.get(&sw) != Some(c) {
                    return false;
                }
            }
        }
        true
    }

    /// Laurent data of one slot at `p`; each coefficient is a form in the
    /// remaining slots.
    pub fn expand_slot(&self, slot: usize, p: &Scalar, low: i64, high: i64) -> Result<SlotWindow> {
        if slot >= self.n {
            return Err(Error::InvalidArgument(format!("slot {slot} out of range")));
        }
        if high < low {
            return Err(Error::InvalidArgument("empty window".into()));
        }
        let width = (high - low + 1) as usize;
        let mut coeffs = vec![FactorizedDifferential::new(self.g, self.n - 1, self.mode); width];
        for (k, c) in &self.terms {
            let f = &k[slot];
            if &f.q == p && -(f.d as i64) < low {
                return Err(Error::InsufficientPrecision(format!(
                    "pole of order {} at {p} below window start {low}",
                    f.d
                )));
            }
            let mut rest = k.clone();
            rest.remove(slot);
            for (i, e) in f.expand(p, low, high).into_iter().enumerate() {
                if !e.is_zero() {
                    coeffs[i].add_term(rest.clone(), c * e)?;
                }
            }
        }
        Ok(SlotWindow { point: Point::Finite(p.clone()), low, high, coeffs })
    }

    /// Canonical records `(poles, coeff)` in sorted order.
    pub fn records(&self) -> Vec<(Vec<(Scalar, u32)>, Scalar)> {
        self.terms
            .iter()
            .map(|(k, c)| (k.iter().map(|p| (p.q.clone(), p.d)).collect(), c.clone()))
            .collect()
    }

    /// The coefficient of `dz` of a 1-form.
    pub fn to_rational(&self) -> Result<RationalFunction> {
        if self.n != 1 {
            return Err(Error::InvalidArgument("not a 1-form".into()));
        }
        let mut f = RationalFunction::zero();
        for (k, c) in &self.terms {
            f = f.add(&RationalFunction::pole(&k[0].q, k[0].d as usize, c.clone()));
        }
        Ok(f)
    }

    /// Imports `f dz`; `f` must vanish at infinity and have rational poles.
    pub fn from_rational(g: u32, mode: Mode, f: &RationalFunction) -> Result<Self> {
        let (poly, parts) = f.apart()?;
        if !poly.is_zero() {
            return Err(Error::InvalidArgument("form has a polynomial part".into()));
        }
        let mut r = FactorizedDifferential::new(g, 1, mode);
        for (a, d, c) in parts {
            r.add_term(vec![PoleForm::new(a, d as u32)], c)?;
        }
        Ok(r)
    }

    /// Restricts a 1-form to its principal part at `a`.
    pub fn principal_part(&self, a: &Scalar) -> FactorizedDifferential {
        let mut r = FactorizedDifferential::new(self.g, self.n, self.mode);
        r.terms = self.terms.iter().filter(|(k, _)| k.iter().all(|f| &f.q == a)).map(|(k, c)| (k.clone(), c.clone())).collect();
        r
    }
}

impl fmt::Debug for FactorizedDifferential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ω[{:?}]({}, {}) {{", self.mode, self.g, self.n)?;
        for (k, c) in &self.terms {
            writeln!(f, "  {c} * {k:?}")?;
        }
        write!(f, "}}")
    }
}

/// A slot expansion: coefficient forms for `(z-p)^k`, `low <= k <= high`.
#[derive(Clone, Debug)]
pub struct SlotWindow {
    pub point: Point,
    pub low: i64,
    pub high: i64,
    pub coeffs: Vec<FactorizedDifferential>,
}

impl SlotWindow {
    pub fn get(&self, k: i64) -> Result<&FactorizedDifferential> {
        if k < self.low || k > self.high {
            return Err(Error::InsufficientPrecision(format!("order {k} outside [{},{}]", self.low, self.high)));
        }
        Ok(&self.coeffs[(k - self.low) as usize])
    }
}

/// The Bergman kernel `dz_1 dz_2/(z_1-z_2)^2`.
pub fn bergman() -> BergmanKernel {
    BergmanKernel
}

#[derive(Clone, Copy, Debug, Default)]
pub struct BergmanKernel;

impl BergmanKernel {
    pub fn eval(&self, z1: &Scalar, z2: &Scalar) -> Result<Scalar> {
        let w = z1 - z2;
        if w.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(pow(&w, -2))
    }

    /// Expansion in the second slot at `z_2 = p + t`; the coefficient of
    /// `t^k` is `(k+1) η_{p,k+2}(z_1)`.
    pub fn expand_second(&self, p: &Scalar, low: i64, high: i64) -> SlotWindow {
        let coeffs = (low..=high)
            .map(|k| {
                let mut f = FactorizedDifferential::new(0, 1, Mode::Tr);
                if k >= 0 {
                    f.add_term(vec![PoleForm::new(p.clone(), k as u32 + 2)], q(k + 1)).unwrap();
                }
                f
            })
            .collect();
        SlotWindow { point: Point::Finite(p.clone()), low, high, coeffs }
    }
}

/// `η ↦ d(η/dx)` on 1-forms written as `f dz`.
pub fn apply_d_over_dx(f: &RationalFunction, dx: &RationalFunction) -> Result<RationalFunction> {
    Ok(f.div(dx)?.derivative())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Poly;
    use crate::scalar::qr;

    fn eta(qq: i64, d: u32) -> PoleForm {
        PoleForm::new(q(qq), d)
    }

    #[test]
    fn slot_expansion() {
        let f = FactorizedDifferential::from_terms(0, 1, Mode::Tr, [(vec![eta(1, 2)], q(1))]).unwrap();
        let w = f.expand_slot(0, &q(1), -2, 0).unwrap();
        assert_eq!(w.get(-2).unwrap().coeff(&[]), q(1));
        assert!(w.get(-1).unwrap().is_zero());
        let w = f.expand_slot(0, &q(0), 0, 2).unwrap();
        let c: Vec<_> = (0..3).map(|k| w.get(k).unwrap().coeff(&[])).collect();
        assert_eq!(c, vec![q(1), q(2), q(3)]);
        assert!(f.expand_slot(0, &q(1), -1, 2).is_err());
    }

    #[test]
    fn symmetry_check() {
        let mut f = FactorizedDifferential::new(0, 2, Mode::Tr);
        f.add_term(vec![eta(0, 2), eta(1, 3)], q(2)).unwrap();
        f.add_term(vec![eta(1, 3), eta(0, 2)], q(2)).unwrap();
        assert!(f.check_symmetry());
        f.add_term(vec![eta(1, 3), eta(0, 2)], q(1)).unwrap();
        assert!(!f.check_symmetry());
    }

    #[test]
    fn d_over_dx() {
        let x_prime = RationalFunction::one();
        let f = RationalFunction::pole(&q(0), 2, q(1));
        assert_eq!(apply_d_over_dx(&f, &x_prime).unwrap(), RationalFunction::pole(&q(0), 3, q(-2)));
        assert!(apply_d_over_dx(&x_prime, &x_prime).unwrap().is_zero());
        // Lambert: dx = (1 - 1/z) dz; dz/dx = z/(z-1), derivative -1/(z-1)^2
        let lx = RationalFunction::new(Poly::from_ints(&[-1, 1]), Poly::from_ints(&[0, 1])).unwrap();
        let r = apply_d_over_dx(&RationalFunction::one(), &lx).unwrap();
        assert_eq!(r, RationalFunction::pole(&q(1), 2, q(-1)));
    }

    #[test]
    fn bergman_expansion() {
        let w = bergman().expand_second(&q(2), 0, 2);
        assert_eq!(w.get(2).unwrap().coeff(&[eta(2, 4)]), q(3));
        // check against evaluation: 1/(z1 - 2 - t)^2 at z1 = 5, t = 1/10
        let t = qr(1, 10);
        let mut approx = zero();
        let full = bergman().expand_second(&q(2), 0, 30);
        for k in 0..=30 {
            approx += full.get(k).unwrap().evaluate(&[q(5)]).unwrap() * pow(&t, k);
        }
        let exact = bergman().eval(&q(5), &(q(2) + &t)).unwrap();
        let err = crate::scalar::abs(&(approx - exact));
        assert!(err < qr(1, 1_000_000_000));
    }

    #[test]
    fn rational_round_trip() {
        let f = RationalFunction::pole(&q(1), 2, q(3)).add(&RationalFunction::pole(&q(-1), 3, qr(1, 2)));
        let d = FactorizedDifferential::from_rational(1, Mode::Tr, &f).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.to_rational().unwrap(), f);
        assert!(d.is_residue_free());
    }
}
