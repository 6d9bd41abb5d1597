//! Simple Hurwitz numbers by enumeration in symmetric groups, and the
//! intersection numbers read off the Lambert curve.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::curve::SpectralCurve;
use crate::error::{Error, Result};
use crate::ratfunc::RationalFunction;
use crate::recursion::Family;
use crate::scalar::{binomial, factorial, parse_scalar, pow, q, Scalar};
use crate::series::{Point, Series};

/// Largest degree the enumeration accepts.
pub const MAX_DEGREE: usize = 6;
/// Largest number of transpositions the enumeration accepts.
pub const MAX_TRANSPOSITIONS: usize = 24;

/// Connected simple Hurwitz number of genus `g` with ramification `mu` over
/// one point; `b = 2g - 2 + len(mu) + d` transpositions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HurwitzQuery {
    pub g: u32,
    pub mu: Vec<usize>,
}

impl HurwitzQuery {
    pub fn new(g: u32, mut mu: Vec<usize>) -> Result<Self> {
        if mu.is_empty() || mu.contains(&0) {
            return Err(Error::InvalidArgument("mu must be a nonempty list of positive parts".into()));
        }
        mu.sort_unstable_by(|a, b| b.cmp(a));
        Ok(HurwitzQuery { g, mu })
    }

    pub fn degree(&self) -> usize {
        self.mu.iter().sum()
    }

    pub fn transpositions(&self) -> usize {
        2 * self.g as usize + self.mu.len() + self.degree() - 2
    }
}

// A state is a permutation and the connected components of the graph whose
// edges are the transpositions used so far, both packed into u64s with
// 4 bits per point.
type State = (u64, u64);

fn get(w: u64, i: usize) -> usize {
    ((w >> (4 * i)) & 0xf) as usize
}

fn set(w: u64, i: usize, v: usize) -> u64 {
    (w & !(0xf << (4 * i))) | ((v as u64) << (4 * i))
}

fn identity(d: usize) -> u64 {
    (0..d).fold(0, |w, i| set(w, i, i))
}

fn apply(state: State, a: usize, b: usize, d: usize) -> State {
    let (perm, comp) = state;
    // left multiplication by (a b): swap the images a and b
    let mut p = perm;
    for i in 0..d {
        let v = get(perm, i);
        if v == a {
            p = set(p, i, b);
        } else if v == b {
            p = set(p, i, a);
        }
    }
    let (ca, cb) = (get(comp, a), get(comp, b));
    let (lo, hi) = (ca.min(cb), ca.max(cb));
    let mut c = comp;
    if lo != hi {
        for i in 0..d {
            if get(comp, i) == hi {
                c = set(c, i, lo);
            }
        }
    }
    (p, c)
}

fn cycle_type(perm: u64, d: usize) -> Vec<usize> {
    let mut seen = [false; MAX_DEGREE];
    let mut t = Vec::new();
    for s in 0..d {
        if seen[s] {
            continue;
        }
        let (mut i, mut len) = (s, 0);
        while !seen[i] {
            seen[i] = true;
            i = get(perm, i);
            len += 1;
        }
        t.push(len);
    }
    t.sort_unstable_by(|a, b| b.cmp(a));
    t
}

fn transitive(comp: u64, d: usize) -> bool {
    (0..d).all(|i| get(comp, i) == 0)
}

/// Number of `b`-tuples of transpositions in `S_d` starting with `first`
/// that generate a transitive group, grouped by the cycle type of their
/// product.
fn count_from(d: usize, b: usize, first: (usize, usize)) -> HashMap<Vec<usize>, BigInt> {
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|a| (a + 1..d).map(move |b| (a, b))).collect();
    let mut layer: HashMap<State, BigInt> = HashMap::new();
    layer.insert(apply((identity(d), identity(d)), first.0, first.1, d), BigInt::one());
    for _ in 1..b {
        let mut next: HashMap<State, BigInt> = HashMap::new();
        for (s, c) in &layer {
            for &(a, bb) in &pairs {
                *next.entry(apply(*s, a, bb, d)).or_insert_with(BigInt::zero) += c;
            }
        }
        layer = next;
    }
    let mut out: HashMap<Vec<usize>, BigInt> = HashMap::new();
    for ((p, c), n) in layer {
        if transitive(c, d) {
            *out.entry(cycle_type(p, d)).or_insert_with(BigInt::zero) += n;
        }
    }
    out
}

/// Connected counts for every cycle type of `S_d` with `b` transpositions,
/// each divided by `d!`.
pub fn hurwitz_table(d: usize, b: usize) -> Result<BTreeMap<Vec<usize>, Scalar>> {
    if d == 0 || d > MAX_DEGREE {
        return Err(Error::CapExceeded(format!("degree {d} outside 1..={MAX_DEGREE}")));
    }
    if b > MAX_TRANSPOSITIONS {
        return Err(Error::CapExceeded(format!("{b} transpositions exceed {MAX_TRANSPOSITIONS}")));
    }
    let mut total: BTreeMap<Vec<usize>, Scalar> = BTreeMap::new();
    if b == 0 {
        if d == 1 {
            total.insert(vec![1], q(1));
        }
        return Ok(total);
    }
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|a| (a + 1..d).map(move |b| (a, b))).collect();
    let parts: Vec<HashMap<Vec<usize>, BigInt>> = pairs.par_iter().map(|&p| count_from(d, b, p)).collect();
    let norm = factorial(d);
    for part in parts {
        for (t, n) in part {
            *total.entry(t).or_insert_with(Scalar::zero) += Scalar::from_integer(n) / &norm;
        }
    }
    Ok(total)
}

/// The connected Hurwitz number of `query`.
pub fn hurwitz_count(query: &HurwitzQuery) -> Result<Scalar> {
    let d = query.degree();
    let t = hurwitz_table(d, query.transpositions())?;
    Ok(t.get(&query.mu).cloned().unwrap_or_else(Scalar::zero))
}

/// Generating data: `(b, mu) -> coefficient of β^b/b! p_mu`.
type Egf = BTreeMap<(usize, Vec<usize>), Scalar>;

fn egf_mul(a: &Egf, b: &Egf, max_d: usize, max_b: usize) -> Egf {
    let mut out = Egf::new();
    for ((ba, ma), ca) in a {
        for ((bb, mb), cb) in b {
            let d: usize = ma.iter().sum::<usize>() + mb.iter().sum::<usize>();
            if d > max_d || ba + bb > max_b {
                continue;
            }
            let mut m: Vec<usize> = ma.iter().chain(mb).copied().collect();
            m.sort_unstable_by(|x, y| y.cmp(x));
            let w = binomial((ba + bb) as i64, *ba as i64) * ca * cb;
            *out.entry((ba + bb, m)).or_insert_with(Scalar::zero) += w;
        }
    }
    out
}

/// The class-sum operator on a monomial `p_mu`: joins and cuts.
fn cut_and_join(mu: &[usize]) -> BTreeMap<Vec<usize>, Scalar> {
    let mut out: BTreeMap<Vec<usize>, Scalar> = BTreeMap::new();
    let mut push = |m: Vec<usize>, c: Scalar| {
        let mut m = m;
        m.sort_unstable_by(|x, y| y.cmp(x));
        *out.entry(m).or_insert_with(Scalar::zero) += c;
    };
    for i in 0..mu.len() {
        for j in i + 1..mu.len() {
            let mut m: Vec<usize> = mu.iter().enumerate().filter(|&(k, _)| k != i && k != j).map(|(_, &v)| v).collect();
            m.push(mu[i] + mu[j]);
            push(m, q((mu[i] * mu[j]) as i64));
        }
        let k = mu[i];
        for a in 1..k {
            let mut m: Vec<usize> = mu.iter().enumerate().filter(|&(t, _)| t != i).map(|(_, &v)| v).collect();
            m.push(a);
            m.push(k - a);
            push(m, Scalar::new((k as i64).into(), 2.into()));
        }
    }
    out
}

/// Checks the cut-and-join equation `∂_β Z = Δ Z` for `Z = exp(F)`, where
/// `F` collects the connected counts of degree `<= max_d` with at most
/// `max_b` transpositions.  Returns the number of coefficients compared.
pub fn check_cut_and_join(max_d: usize, max_b: usize) -> Result<usize> {
    let mut f = Egf::new();
    for d in 1..=max_d {
        for b in 0..=max_b {
            for (mu, c) in hurwitz_table(d, b)? {
                if !c.is_zero() {
                    f.insert((b, mu), c);
                }
            }
        }
    }
    // Z = Σ F^k / k!
    let mut z = Egf::new();
    z.insert((0, vec![]), q(1));
    let mut power = z.clone();
    for k in 1..=max_d {
        power = egf_mul(&power, &f, max_d, max_b);
        for (key, c) in &power {
            *z.entry(key.clone()).or_insert_with(Scalar::zero) += c / factorial(k);
        }
    }
    let mut compared = 0;
    for b in 0..max_b {
        let mut lhs: BTreeMap<Vec<usize>, Scalar> = BTreeMap::new();
        let mut rhs: BTreeMap<Vec<usize>, Scalar> = BTreeMap::new();
        for ((bb, mu), c) in &z {
            if *bb == b + 1 {
                *lhs.entry(mu.clone()).or_insert_with(Scalar::zero) += c;
            }
            if *bb == b {
                for (m, w) in cut_and_join(mu) {
                    *rhs.entry(m).or_insert_with(Scalar::zero) += &w * c;
                }
            }
        }
        lhs.retain(|_, v| !v.is_zero());
        rhs.retain(|_, v| !v.is_zero());
        if lhs != rhs {
            return Err(Error::AssumptionViolation(format!("cut-and-join fails at b = {b}")));
        }
        compared += lhs.len();
    }
    Ok(compared)
}

/// `ξ_k = (-∂_x)^{k+1} y`, `k = 0..count`.
pub fn xi_basis(curve: &SpectralCurve, count: usize) -> Result<Vec<RationalFunction>> {
    let mut f = curve.y.derivative().div(&curve.dx)?.scale(&q(-1));
    let mut out = vec![f.clone()];
    for _ in 1..count {
        f = f.derivative().div(&curve.dx)?.scale(&q(-1));
        out.push(f.clone());
    }
    Ok(out)
}

/// Intersection numbers read off `ω(0,3)` and `ω(1,1)` in the `dξ_k` basis.
#[derive(Clone, Debug, PartialEq)]
pub struct HodgeTable {
    /// `∫_{M_{0,3}} 1`
    pub one_03: Scalar,
    /// `∫_{M_{1,1}} ψ_1`
    pub psi_11: Scalar,
    /// `∫_{M_{1,1}} λ_1`
    pub lambda_11: Scalar,
}

const PROBES: [(i64, i64); 4] = [(7, 2), (3, 1), (5, 1), (-5, 3)];

fn probe(i: usize) -> Scalar {
    let (a, b) = PROBES[i];
    Scalar::new(a.into(), b.into())
}

/// Solves `ω(0,3) = c Π dξ_0` and `ω(1,1) = ⟨ψ⟩ dξ_1 - ⟨λ⟩ dξ_0` exactly.
pub fn hodge_extract(family: &Family, curve: &SpectralCurve) -> Result<HodgeTable> {
    let w03 = family.get(&(0, 3)).ok_or_else(|| Error::MissingInput("ω(0,3)".into()))?;
    let w11 = family.get(&(1, 1)).ok_or_else(|| Error::MissingInput("ω(1,1)".into()))?;
    let xi = xi_basis(curve, 2)?;
    let d0 = xi[0].derivative();
    let d1 = xi[1].derivative();
    let singular = || Error::AssumptionViolation("ω is not in the span of the dξ basis".into());

    let pts: Vec<Scalar> = (0..3).map(probe).collect();
    let basis: Scalar = pts.iter().map(|p| d0.eval(p)).collect::<Result<Vec<_>>>()?.iter().product();
    if basis.is_zero() {
        return Err(singular());
    }
    let one_03 = w03.evaluate(&pts)? / &basis;
    let alt: Vec<Scalar> = (1..4).map(probe).collect();
    let alt_basis: Scalar = alt.iter().map(|p| d0.eval(p)).collect::<Result<Vec<_>>>()?.iter().product();
    if w03.evaluate(&alt)? != &one_03 * &alt_basis {
        return Err(singular());
    }

    let row = |p: &Scalar| -> Result<(Scalar, Scalar, Scalar)> { Ok((d1.eval(p)?, d0.eval(p)?, w11.evaluate(std::slice::from_ref(p))?)) };
    let (a1, b1, w1) = row(&probe(0))?;
    let (a2, b2, w2) = row(&probe(1))?;
    let det = &a1 * &b2 - &a2 * &b1;
    if det.is_zero() {
        return Err(singular());
    }
    let psi = (&w1 * &b2 - &w2 * &b1) / &det;
    let neg_lambda = (&a1 * &w2 - &a2 * &w1) / &det;
    for i in 2..4 {
        let (a, b, w) = row(&probe(i))?;
        if w != &psi * &a + &neg_lambda * &b {
            return Err(singular());
        }
    }
    Ok(HodgeTable { one_03, psi_11: psi, lambda_11: -neg_lambda })
}

/// One frozen Hurwitz/Hodge relation: `H(g, mu) = Σ weight · value`.
#[derive(Clone, Debug, PartialEq)]
pub struct Convention {
    pub g: u32,
    pub mu: Vec<usize>,
    pub one_03: Scalar,
    pub psi_11: Scalar,
    pub lambda_11: Scalar,
}

/// A predicted versus counted Hurwitz number.
#[derive(Clone, Debug, PartialEq)]
pub struct ConventionCheck {
    pub g: u32,
    pub mu: Vec<usize>,
    pub predicted: Scalar,
    pub counted: Scalar,
}

impl ConventionCheck {
    pub fn pass(&self) -> bool {
        self.predicted == self.counted
    }
}

/// Compares the Hodge table with brute-force Hurwitz counts through the
/// given conventions.
pub fn check_conventions(table: &HodgeTable, conventions: &[Convention]) -> Result<Vec<ConventionCheck>> {
    conventions
        .iter()
        .map(|c| {
            let predicted = &c.one_03 * &table.one_03 + &c.psi_11 * &table.psi_11 + &c.lambda_11 * &table.lambda_11;
            let counted = hurwitz_count(&HurwitzQuery::new(c.g, c.mu.clone())?)?;
            Ok(ConventionCheck { g: c.g, mu: c.mu.clone(), predicted, counted })
        })
        .collect()
}

/// How `ω(g,1)` expanded in `X = exp(exponent · x)` near `point` encodes
/// one-part Hurwitz numbers: `[X^{d-1}] ω/dX = d^{part_power} H / b!` (the
/// factorial only when `divide_by_b_factorial`).
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionConvention {
    pub point: Scalar,
    pub exponent: Scalar,
    pub part_power: u32,
    pub divide_by_b_factorial: bool,
}

/// The frozen conventions shipped with the crate.
#[derive(Clone, Debug, PartialEq)]
pub struct Conventions {
    pub hodge: Vec<Convention>,
    pub expansion: ExpansionConvention,
}

const CONVENTIONS_JSON: &str = include_str!("../fixtures/hurwitz_conventions.json");

fn json_scalar(v: &serde_json::Value, key: &str) -> Result<Scalar> {
    let s = v.get(key).and_then(|x| x.as_str()).ok_or_else(|| Error::Parse(format!("missing string field {key}")))?;
    parse_scalar(s)
}

fn json_uint(v: &serde_json::Value, key: &str) -> Result<u64> {
    v.get(key).and_then(|x| x.as_u64()).ok_or_else(|| Error::Parse(format!("missing integer field {key}")))
}

/// Parses a conventions document.
pub fn parse_conventions(text: &str) -> Result<Conventions> {
    let v: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let rows = v.get("hodge").and_then(|x| x.as_array()).ok_or_else(|| Error::Parse("missing hodge list".into()))?;
    let mut hodge = Vec::new();
    for r in rows {
        let mu = r
            .get("mu")
            .and_then(|x| x.as_array())
            .ok_or_else(|| Error::Parse("missing mu".into()))?
            .iter()
            .map(|x| x.as_u64().map(|n| n as usize).ok_or_else(|| Error::Parse("bad part".into())))
            .collect::<Result<Vec<_>>>()?;
        hodge.push(Convention {
            g: json_uint(r, "g")? as u32,
            mu,
            one_03: json_scalar(r, "one_03")?,
            psi_11: json_scalar(r, "psi_11")?,
            lambda_11: json_scalar(r, "lambda_11")?,
        });
    }
    let e = v.get("expansion").ok_or_else(|| Error::Parse("missing expansion".into()))?;
    let expansion = ExpansionConvention {
        point: json_scalar(e, "point")?,
        exponent: json_scalar(e, "exponent")?,
        part_power: json_uint(e, "part_power")? as u32,
        divide_by_b_factorial: e.get("divide_by_b_factorial").and_then(|x| x.as_bool()).ok_or_else(|| Error::Parse("missing divide_by_b_factorial".into()))?,
    };
    Ok(Conventions { hodge, expansion })
}

pub fn frozen_conventions() -> Result<Conventions> {
    parse_conventions(CONVENTIONS_JSON)
}

/// Compares the expansion of `ω(g,1)` at the log point of `x` with the
/// one-part Hurwitz numbers of degree `1..=max_d`.
pub fn check_expansion(family: &Family, curve: &SpectralCurve, conv: &ExpansionConvention, g: u32, max_d: usize) -> Result<Vec<ConventionCheck>> {
    let w = family.get(&(g, 1)).ok_or_else(|| Error::MissingInput(format!("ω({g},1)")))?;
    let a = &conv.point;
    let logs = curve.x.log_terms();
    if logs.len() != 1 || &logs[0].0 != a || &logs[0].1 * &conv.exponent != q(1) {
        return Err(Error::AssumptionViolation("x must have a single log term at the expansion point with matching coefficient".into()));
    }
    let pt = Point::Finite(a.clone());
    let n = max_d as i64 + 1;
    let r = curve.x.rational.laurent(&pt, n);
    if r.val_bound() < 0 || !r.coeff(0)?.is_zero() {
        return Err(Error::AssumptionViolation("the rational part of x must vanish at the expansion point".into()));
    }
    // X = t exp(exponent · r(t)) with t = z - a
    let big_x = &Series::t() * &r.scale(&conv.exponent).exp(n)?;
    let t_of_x = big_x.reversion(n)?;
    let f = w.to_rational()?.laurent(&pt, n);
    if f.val_bound() < 0 {
        return Err(Error::AssumptionViolation(format!("ω({g},1) has a pole at the expansion point")));
    }
    let series = &f.compose(&t_of_x, n)? * &t_of_x.derivative();
    (1..=max_d)
        .map(|d| {
            let query = HurwitzQuery::new(g, vec![d])?;
            let mut predicted = series.coeff(d as i64 - 1)? / pow(&q(d as i64), conv.part_power as i64);
            if conv.divide_by_b_factorial {
                predicted *= factorial(query.transpositions());
            }
            Ok(ConventionCheck { g, mu: vec![d], predicted, counted: hurwitz_count(&query)? })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::recursion::Engine;
    use crate::scalar::qr;
    use crate::{Mobius, Mode};

    fn h(g: u32, mu: &[usize]) -> Scalar {
        hurwitz_count(&HurwitzQuery::new(g, mu.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn small_counts() {
        assert_eq!(h(0, &[1]), q(1));
        assert_eq!(h(0, &[2]), qr(1, 2));
        // ordered pairs of distinct transpositions in S_3, over 3!
        assert_eq!(h(0, &[3]), q(1));
        assert_eq!(h(0, &[1, 1]), qr(1, 2));
        // the only transposition of S_2, three times
        assert_eq!(h(1, &[2]), qr(1, 2));
        assert_eq!(h(1, &[1]), q(0));
    }

    #[test]
    fn genus_zero_one_part_formula() {
        // a d-cycle has d^{d-2} minimal factorizations into transpositions,
        // and there are (d-1)! d-cycles: H = d^{d-3}
        for d in 2..=6usize {
            assert_eq!(h(0, &[d]), crate::scalar::pow(&q(d as i64), d as i64 - 3));
        }
    }

    #[test]
    fn caps() {
        assert!(matches!(hurwitz_count(&HurwitzQuery::new(0, vec![7]).unwrap()), Err(Error::CapExceeded(_))));
        assert!(matches!(hurwitz_count(&HurwitzQuery::new(20, vec![1]).unwrap()), Err(Error::CapExceeded(_))));
        assert!(HurwitzQuery::new(0, vec![]).is_err());
    }

    #[test]
    fn cut_and_join_holds() {
        assert!(check_cut_and_join(4, 6).unwrap() > 10);
    }

    #[test]
    fn cut_and_join_operator_on_transposition_sum() {
        // Δ p_1^2 = p_2 (one transposition in S_2), Δ p_2 = p_1^2
        let j = cut_and_join(&[1, 1]);
        assert_eq!(j, BTreeMap::from([(vec![2], q(1))]));
        let c = cut_and_join(&[2]);
        assert_eq!(c, BTreeMap::from([(vec![1, 1], q(1))]));
    }

    fn lambert_table(c: &SpectralCurve) -> HodgeTable {
        let fam = Engine::new(c.clone()).family(Mode::Tr, 1).unwrap();
        hodge_extract(&fam, c).unwrap()
    }

    #[test]
    fn lambert_hodge_numbers() {
        let t = lambert_table(&fixtures::lambert());
        assert_eq!(t.one_03, q(1));
        assert_eq!(t.psi_11, t.lambda_11);
        assert_eq!(t.psi_11, qr(1, 24));
    }

    #[test]
    fn hodge_extract_is_chart_independent() {
        let base = lambert_table(&fixtures::lambert());
        let m = Mobius::new(q(2), q(1), q(1), q(3)).unwrap();
        let moved = fixtures::lambert().mobius(&m).unwrap();
        assert_eq!(lambert_table(&moved), base);
    }

    #[test]
    fn frozen_conventions_agree_with_counts() {
        let conv = frozen_conventions().unwrap();
        let t = lambert_table(&fixtures::lambert());
        let checks = check_conventions(&t, &conv.hodge).unwrap();
        assert_eq!(checks.len(), 4);
        for c in checks {
            assert!(c.pass(), "{c:?}");
        }
    }

    #[test]
    fn expansion_matches_counts() {
        let c = fixtures::lambert();
        let conv = frozen_conventions().unwrap();
        let fam = Engine::new(c.clone()).family(Mode::Tr, 3).unwrap();
        for g in 1..=2 {
            for chk in check_expansion(&fam, &c, &conv.expansion, g, 4).unwrap() {
                assert!(chk.pass(), "{chk:?}");
            }
        }
        // the r-spin curve carries different numbers
        let rs = fixtures::r_spin();
        let rfam = Engine::new(rs.clone()).family(Mode::Tr, 1).unwrap();
        assert!(check_expansion(&rfam, &rs, &conv.expansion, 1, 4).unwrap().iter().any(|c| !c.pass()));
        let b = fixtures::bms(3).unwrap();
        assert!(check_expansion(&fam, &b, &conv.expansion, 1, 3).is_err());
    }

    #[test]
    fn conventions_parse_errors() {
        assert!(parse_conventions("{}").is_err());
        assert!(parse_conventions("not json").is_err());
    }

    #[test]
    fn hodge_extract_needs_inputs() {
        let c = fixtures::lambert();
        let mut fam = Engine::new(c.clone()).family(Mode::Tr, 1).unwrap();
        fam.remove(&(1, 1));
        assert!(matches!(hodge_extract(&fam, &c), Err(Error::MissingInput(_))));
    }
}
