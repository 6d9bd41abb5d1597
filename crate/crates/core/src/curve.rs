//! Spectral curves on the Riemann sphere with logarithmic terms.

use std::fmt;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::ratfunc::RationalFunction;
use crate::scalar::{one, q, Scalar};
use crate::series::{Point, Series};

/// `R(z) + Σ c log(z - a)`, with pairwise distinct points and nonzero `c`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LogRationalFunction {
    pub rational: RationalFunction,
    log_terms: Vec<(Scalar, Scalar)>,
}

impl LogRationalFunction {
    /// Merges repeated points and drops vanishing coefficients.
    pub fn new(rational: RationalFunction, logs: Vec<(Scalar, Scalar)>) -> Self {
        let mut merged: Vec<(Scalar, Scalar)> = Vec::new();
        for (a, c) in logs {
            match merged.iter_mut().find(|(b, _)| *b == a) {
                Some(e) => e.1 += c,
                None => merged.push((a, c)),
            }
        }
        merged.retain(|(_, c)| !c.is_zero());
        merged.sort_by(|u, v| u.0.cmp(&v.0));
        LogRationalFunction { rational, log_terms: merged }
    }

    /// Like `new` but rejects repeated log points or zero coefficients.
    pub fn checked(rational: RationalFunction, logs: Vec<(Scalar, Scalar)>) -> Result<Self> {
        for (i, (a, c)) in logs.iter().enumerate() {
            if c.is_zero() {
                return Err(Error::InvalidArgument(format!("zero log coefficient at {a}")));
            }
            if logs[..i].iter().any(|(b, _)| b == a) {
                return Err(Error::InvalidArgument(format!("repeated log point {a}")));
            }
        }
        Ok(LogRationalFunction::new(rational, logs))
    }

    pub fn rational(r: RationalFunction) -> Self {
        LogRationalFunction { rational: r, log_terms: vec![] }
    }

    pub fn z() -> Self {
        LogRationalFunction::rational(RationalFunction::z())
    }

    /// `c log(z - a)`
    pub fn log(a: Scalar, c: Scalar) -> Self {
        LogRationalFunction::new(RationalFunction::zero(), vec![(a, c)])
    }

    pub fn log_terms(&self) -> &[(Scalar, Scalar)] {
        &self.log_terms
    }

    pub fn add(&self, o: &LogRationalFunction) -> LogRationalFunction {
        let mut logs = self.log_terms.clone();
        logs.extend(o.log_terms.iter().cloned());
        LogRationalFunction::new(self.rational.add(&o.rational), logs)
    }

    pub fn scale(&self, s: &Scalar) -> LogRationalFunction {
        LogRationalFunction::new(
            self.rational.scale(s),
            self.log_terms.iter().map(|(a, c)| (a.clone(), c * s)).collect(),
        )
    }

    pub fn sub(&self, o: &LogRationalFunction) -> LogRationalFunction {
        self.add(&o.scale(&q(-1)))
    }

    /// The derivative, always rational.
    pub fn derivative(&self) -> RationalFunction {
        let mut d = self.rational.derivative();
        for (a, c) in &self.log_terms {
            d = d.add(&RationalFunction::pole(a, 1, c.clone()));
        }
        d
    }

    /// Expansion at a point that is not a log point, up to the additive
    /// constant `Σ c log(p - a)`, known below `prec`.
    pub fn expand(&self, p: &Scalar, prec: i64) -> Result<Series> {
        let mut s = self.rational.laurent(&Point::Finite(p.clone()), prec);
        for (a, c) in &self.log_terms {
            if a == p {
                return Err(Error::InvalidArgument(format!("expansion at log point {p}")));
            }
            // log(1 + t/(p-a))
            let r = (p - a).recip();
            let lin = Series::exact(0, vec![one(), r]);
            s = &s + &lin.log(prec)?.scale(c);
        }
        Ok(s.truncate(prec))
    }

    /// True when there are no log terms.
    pub fn is_rational(&self) -> bool {
        self.log_terms.is_empty()
    }

    /// Precomposition with `z = (aζ + b)/(cζ + d)`, dropping additive
    /// constants.  A log point sent to infinity simply disappears from the
    /// finite list.
    pub fn mobius(&self, m: &Mobius) -> Result<LogRationalFunction> {
        let rat = self.rational.compose(&m.as_rf());
        let mut logs = Vec::new();
        for (qq, cf) in &self.log_terms {
            // z - q = ((a - q c) ζ + (b - q d)) / (c ζ + d)
            let lead = &m.a - qq * &m.c;
            if !lead.is_zero() {
                let root = -(&m.b - qq * &m.d) / &lead;
                logs.push((root, cf.clone()));
            }
            if !m.c.is_zero() {
                logs.push((-&m.d / &m.c, -cf.clone()));
            }
        }
        Ok(LogRationalFunction::new(rat, logs))
    }
}

impl fmt::Debug for LogRationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.rational)?;
        for (a, c) in &self.log_terms {
            write!(f, " + {c}*log(z - {a})")?;
        }
        Ok(())
    }
}

/// `z = (a ζ + b)/(c ζ + d)`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mobius {
    pub a: Scalar,
    pub b: Scalar,
    pub c: Scalar,
    pub d: Scalar,
}

impl Mobius {
    pub fn new(a: Scalar, b: Scalar, c: Scalar, d: Scalar) -> Result<Self> {
        if (&a * &d - &b * &c).is_zero() {
            return Err(Error::InvalidArgument("degenerate Moebius transform".into()));
        }
        Ok(Mobius { a, b, c, d })
    }

    pub fn as_rf(&self) -> RationalFunction {
        RationalFunction::new(
            Poly::new(vec![self.b.clone(), self.a.clone()]),
            Poly::new(vec![self.d.clone(), self.c.clone()]),
        )
        .expect("nondegenerate")
    }

    /// The ζ mapped to a finite z, or `None` if z has no finite preimage.
    pub fn preimage(&self, z: &Scalar) -> Option<Scalar> {
        let den = z * &self.c - &self.a;
        if den.is_zero() {
            None
        } else {
            Some((&self.b - z * &self.d) / den)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RamPoint {
    pub p: Scalar,
    /// `σ(p + t) - p` as a series in `t`.
    pub deck: Series,
    /// `x(p + t) - x(p)`
    pub local_x: Series,
    /// `y(p + t) - y(σ(p + t))`
    pub local_y_diff: Series,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VitalPoint {
    pub a: Scalar,
    pub alpha_inv: Scalar,
    pub alpha: Scalar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    X,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Vitality {
    Vital,
    NonVital,
}

#[derive(Clone, Debug)]
pub struct SpectralCurve {
    pub x: LogRationalFunction,
    pub y: LogRationalFunction,
    /// `dx/dz`
    pub dx: RationalFunction,
    /// `dy/dz`
    pub dy: RationalFunction,
    pub ramification: Vec<RamPoint>,
    pub vital: Vec<VitalPoint>,
    pub non_vital_log_poles: Vec<Scalar>,
    pub order: i64,
}

pub const DEFAULT_ORDER: i64 = 24;

/// Order of a 1-form `f dz` at infinity, in the coordinate `w = 1/z`.
fn form_order_at_infinity(f: &RationalFunction) -> i64 {
    f.order_at_infinity() - 2
}

/// Rational zeros (with multiplicity) of a nonzero rational function,
/// failing on irrational ones.
fn finite_zeros(f: &RationalFunction, what: &str) -> Result<Vec<(Scalar, usize)>> {
    let (roots, rest) = f.num().rational_roots();
    if rest.degree() > 0 {
        return Err(Error::UnsupportedCurve(format!(
            "{what} has zeros that are not rational (factor {rest:?}); apply a Moebius change or rescale"
        )));
    }
    Ok(roots)
}

fn finite_poles(f: &RationalFunction, what: &str) -> Result<Vec<(Scalar, usize)>> {
    let (roots, rest) = f.den().rational_roots();
    if rest.degree() > 0 {
        return Err(Error::UnsupportedCurve(format!("{what} has poles that are not rational")));
    }
    Ok(roots)
}

/// Deck involution and local data at a simple zero `p` of `dx`, known
/// below order `order + 1` in `t`.
pub fn local_ram_data(x: &RationalFunction, y: &RationalFunction, p: &Scalar, order: i64) -> Result<RamPoint> {
    let pt = Point::Finite(p.clone());
    let n = order.max(2);
    let xs = x.laurent(&pt, n + 2).integral()?;
    if xs.valuation() != Some(2) {
        return Err(Error::AssumptionViolation(format!("zero of dx at {p} is not simple")));
    }
    let a2 = xs.coeff(2)?;
    let normed = xs.shift(-2).scale(&a2.recip());
    let s = &normed.sqrt(n)? * &Series::t();
    let sinv = s.reversion(n + 1)?;
    let sigma = sinv.compose(&(-&s), n + 1)?;
    let ys = y.laurent(&pt, n + 1).integral()?;
    let ysig = ys.compose(&sigma, n + 1)?;
    Ok(RamPoint { p: p.clone(), deck: sigma, local_x: xs, local_y_diff: &ys - &ysig })
}

impl SpectralCurve {
    pub fn has_trivial_dual(&self) -> bool {
        finite_zeros(&self.dy, "dy").map(|z| z.is_empty()).unwrap_or(false)
            && form_order_at_infinity(&self.dy) <= 0
    }

    pub fn ram_points(&self) -> Vec<Scalar> {
        self.ramification.iter().map(|r| r.p.clone()).collect()
    }

    pub fn vital_points(&self) -> Vec<Scalar> {
        self.vital.iter().map(|v| v.a.clone()).collect()
    }

    pub fn ram(&self, p: &Scalar) -> Option<&RamPoint> {
        self.ramification.iter().find(|r| &r.p == p)
    }

    /// Deck series at a ramification point to the given order.
    pub fn deck_transform(&self, p: &Scalar, order: i64) -> Result<Series> {
        if self.ram(p).is_none() {
            return Err(Error::InvalidArgument(format!("{p} is not a ramification point")));
        }
        Ok(local_ram_data(&self.dx, &self.dy, p, order)?.deck)
    }

    pub fn local_data(&self, p: &Scalar, order: i64) -> Result<RamPoint> {
        local_ram_data(&self.dx, &self.dy, p, order)
    }

    pub fn classify_log_point(&self, a: &Scalar, side: Side) -> Result<Vitality> {
        let (own, other) = match side {
            Side::Y => (&self.dy, &self.dx),
            Side::X => (&self.dx, &self.dy),
        };
        let ord = own.order_at(a);
        if ord >= 0 {
            return Err(Error::InvalidArgument(format!("{a} is not a pole")));
        }
        if ord == -1 && other.order_at(a) >= 0 {
            Ok(Vitality::Vital)
        } else {
            Ok(Vitality::NonVital)
        }
    }

    pub fn mobius(&self, m: &Mobius) -> Result<SpectralCurve> {
        for s in self.ram_points().iter().chain(self.vital_points().iter()) {
            if m.preimage(s).is_none() {
                return Err(Error::InvalidArgument(format!("special point {s} is sent to infinity")));
            }
        }
        build_curve_with_order(self.x.mobius(m)?, self.y.mobius(m)?, self.order)
    }
}

pub fn build_curve(x: LogRationalFunction, y: LogRationalFunction) -> Result<SpectralCurve> {
    build_curve_with_order(x, y, DEFAULT_ORDER)
}

pub fn build_curve_with_order(x: LogRationalFunction, y: LogRationalFunction, order: i64) -> Result<SpectralCurve> {
    let dx = x.derivative();
    let dy = y.derivative();
    if dx.is_zero() || dy.is_zero() {
        return Err(Error::InvalidArgument("dx and dy must be nonzero".into()));
    }
    if form_order_at_infinity(&dx) > 0 {
        return Err(Error::ChangeChart("dx vanishes at infinity".into()));
    }
    let zeros = finite_zeros(&dx, "dx")?;
    let mut ramification = Vec::new();
    for (p, m) in zeros {
        if m > 1 {
            return Err(Error::AssumptionViolation(format!("dx has a zero of order {m} at {p}")));
        }
        let ord_y = dy.order_at(&p);
        if ord_y != 0 {
            return Err(Error::AssumptionViolation(format!(
                "dy is {} at the ramification point {p}",
                if ord_y > 0 { "zero" } else { "singular" }
            )));
        }
        ramification.push(local_ram_data(&dx, &dy, &p, order)?);
    }
    let mut vital = Vec::new();
    let mut non_vital = Vec::new();
    for (a, m) in finite_poles(&dy, "dy")? {
        let res = dy.laurent(&Point::Finite(a.clone()), 0).coeff_unchecked(-1);
        if m == 1 && dx.order_at(&a) >= 0 {
            vital.push(VitalPoint { a, alpha: res.recip(), alpha_inv: res });
        } else if !res.is_zero() {
            non_vital.push(a);
        }
    }
    // a vital point at infinity cannot be handled in this chart
    if form_order_at_infinity(&dy) == -1 && form_order_at_infinity(&dx) >= 0 {
        return Err(Error::ChangeChart("infinity is a vital point; move it to a finite point".into()));
    }
    Ok(SpectralCurve { x, y, dx, dy, ramification, vital, non_vital_log_poles: non_vital, order })
}

/// Exchanges the roles of `x` and `y`.
pub fn swap_curve(curve: &SpectralCurve) -> Result<SpectralCurve> {
    build_curve_with_order(curve.y.clone(), curve.x.clone(), curve.order)
}
