//! The x–y swap of LogTR families and related closed formulas.
//!
//! All formulas are evaluated exactly at rational sample points (or as
//! principal parts at one special point).  Every vertex `i` gets a local
//! coordinate `ε_i = z_i - c_i` and a formal variable `u_i`; the generating
//! object is assembled as a [`Jet`], each vertex is reduced by its linear
//! functional as soon as all factors touching it are in, and connected
//! parts come from set-partition cumulants of disconnected correlators.

use std::collections::{BTreeMap, HashMap};

use num_traits::{Signed, Zero};

use crate::curve::SpectralCurve;
use crate::differential::{FactorizedDifferential, PoleForm};
use crate::error::{Error, Result};
use crate::jet::{cumulant_weight, e_of, h_of, key, set_partitions, set_vertex, u_of, Ctx, ExpandRule, Jet};
use crate::ratfunc::RationalFunction;
use crate::recursion::{log_deformation, Family};
use crate::scalar::{factorial, is_integer, one, pow, q, Scalar};
use crate::series::{inv_sfun_coeffs, sfun_coeffs, Point, Series};

fn d_by(f: &RationalFunction, by: &RationalFunction) -> Result<RationalFunction> {
    f.derivative().div(by)
}

/// `[f, Df, D²f, ..., D^k f]` on local series, `D = inv · d/dε`.
fn iter_ser(f: Series, inv: &Series, k: usize) -> Vec<Series> {
    let mut v = vec![f];
    for _ in 0..k {
        let next = inv * &v.last().unwrap().derivative();
        v.push(next);
    }
    v
}

/// `[f, Df, ...]` for `D = z d/dz`.
fn iterate_euler(f: &RationalFunction, k: usize) -> Vec<RationalFunction> {
    let mut v = vec![f.clone()];
    for _ in 0..k {
        let next = v.last().unwrap().derivative().mul(&RationalFunction::z());
        v.push(next);
    }
    v
}

fn z_minus(a: &Scalar) -> RationalFunction {
    RationalFunction::z().sub(&RationalFunction::constant(a.clone()))
}

/// Local data of one vertex.
struct Site {
    i: usize,
    c: Scalar,
    prec: i64,
}

impl Site {
    fn ser(&self, f: &RationalFunction) -> Series {
        f.laurent(&Point::Finite(self.c.clone()), self.prec)
    }

    /// `coef ħ^h u^u f(c + ε)`.
    fn jet(&self, f: &RationalFunction, h: i64, u: i64, coef: &Scalar, ctx: &Ctx) -> Result<Jet> {
        Jet::from_series(self.i, &self.ser(f), h, u, coef, ctx)
    }

    fn jet_series(&self, s: &Series, h: i64, u: i64, coef: &Scalar, ctx: &Ctx) -> Result<Jet> {
        Jet::from_series(self.i, s, h, u, coef, ctx)
    }

    fn eps(&self) -> Jet {
        Jet::monomial(one(), key(0, &[(self.i, 0, 1)]))
    }
}

/// `Σ_{k≥1} (s/2)^k/k! (uħ)^k f_k`, the shift `exp(s uħ D/2) z - z` for
/// `f_k = D^k z`.
fn shift_jet(site: &Site, f: &[Series], s: i64, ctx: &Ctx) -> Result<Jet> {
    let mut out = Jet::zero();
    for (k, fk) in f.iter().enumerate().skip(1) {
        let c = pow(&Scalar::new(s.into(), 2.into()), k as i64) / factorial(k);
        out.add_assign(&site.jet_series(fk, k as i64, k as i64, &c, ctx)?);
    }
    Ok(out)
}

/// `(w_i - w_j)(w̄_i - w̄_j) / ((w_i - w̄_j)(w̄_i - w_j))` for `w = z + W⁺`,
/// `w̄ = z + W⁻`.
fn cross_ratio(si: &Site, sj: &Site, wi: &[Jet; 2], wj: &[Jet; 2], ctx: &Ctx) -> Result<Jet> {
    let inv = (&si.c - &sj.c).recip();
    let base = {
        let mut b = si.eps();
        b.add_scaled(&sj.eps(), &q(-1));
        b
    };
    let a = |s: usize, t: usize| {
        let mut x = base.clone();
        x.add_assign(&wi[s]);
        x.add_scaled(&wj[t], &q(-1));
        x.scale(&inv)
    };
    let one_plus = |x: Jet| {
        let mut y = x;
        y.add_term(key(0, &[]), one());
        y
    };
    let num = one_plus(a(0, 0)).mul(&one_plus(a(1, 1)), ctx);
    let den = a(0, 1).recip1p(ctx)?.mul(&a(1, 0).recip1p(ctx)?, ctx);
    Ok(num.mul(&den, ctx))
}

/// `√(dw dw̄)/dz · 1/(D(w - w̄)/(uħ))` at one vertex, as a logarithm; `f` are
/// the iterated derivatives `D^k z` and `xp` is `1/D z`.
fn self_loop(site: &Site, f: &[Series], xp: &Series, ctx: &Ctx) -> Result<Jet> {
    let mut a = [Jet::zero(), Jet::zero()];
    for (idx, s) in [1i64, -1].iter().enumerate() {
        for (k, fk) in f.iter().enumerate().skip(1) {
            let c = pow(&Scalar::new((*s).into(), 2.into()), k as i64) / factorial(k);
            a[idx].add_assign(&site.jet_series(&fk.derivative(), k as i64, k as i64, &c, ctx)?);
        }
    }
    let mut w = Jet::zero();
    for (k, fk) in f.iter().enumerate().skip(3).step_by(2) {
        let c = pow(&Scalar::new(1.into(), 2.into()), k as i64 - 1) / factorial(k);
        w.add_assign(&site.jet_series(&(xp * fk), k as i64 - 1, k as i64 - 1, &c, ctx)?);
    }
    let half = Scalar::new(1.into(), 2.into());
    let mut out = a[0].log1p(ctx)?.scale(&half);
    out.add_scaled(&a[1].log1p(ctx)?, &half);
    out.add_scaled(&w.log1p(ctx)?, &q(-1));
    Ok(out)
}

/// `t[r][e]`: the functional applied to `ε^e` at operator depth `r`, from
/// `init` and one step of the operator.
fn table(init: &Series, step: impl Fn(&Series) -> Series, rmax: i64) -> Result<Vec<Vec<Scalar>>> {
    let rmax = rmax.max(0) as usize;
    let mut t = vec![vec![Scalar::zero(); rmax + 1]; rmax + 1];
    for e in 0..=rmax {
        let mut s = init.shift(e as i64);
        for row in t.iter_mut() {
            row[e] = s.coeff(0)?;
            s = step(&s);
        }
    }
    Ok(t)
}

/// Applies the functional of vertex `i`: monomials `u^u ε^e` become
/// `tab[u - shift][e]`; the vertex is left with `u = marker` or, when
/// `absent_ok`, untouched monomials are kept as absent.
fn reduce(jet: &Jet, i: usize, tab: &dyn Fn(i64) -> Result<Vec<Vec<Scalar>>>, shift: i64, absent_ok: bool, marker: i64) -> Result<Jet> {
    let umax = jet.terms.keys().map(|k| u_of(*k, i)).max().unwrap_or(0);
    let t = tab(umax - shift)?;
    let mut out = Jet::zero();
    for (k, c) in &jet.terms {
        let u = u_of(*k, i);
        let e = e_of(*k, i);
        let r = u - shift;
        if r >= 0 {
            if e < 0 {
                return Err(Error::AssumptionViolation("negative ε degree at a regular vertex".into()));
            }
            if e <= r {
                let v = &t[r as usize][e as usize];
                if !v.is_zero() {
                    out.add_term(set_vertex(*k, i, marker, 0), c * v);
                }
            }
        } else if absent_ok && u == 0 && e == 0 {
            out.add_term(*k, c.clone());
        }
    }
    Ok(out)
}

fn check_regular(curve: &SpectralCurve, z: &[Scalar]) -> Result<()> {
    for (i, c) in z.iter().enumerate() {
        if curve.dx.order_at(c) != 0 || curve.dy.order_at(c) != 0 {
            return Err(Error::InvalidArgument(format!("sample point {c} is special")));
        }
        if z[..i].contains(c) {
            return Err(Error::InvalidArgument(format!("sample point {c} repeated")));
        }
    }
    Ok(())
}

/// Disconnected correlators keyed by vertex support, then `(ħ, order)`.
type Supports = HashMap<u32, BTreeMap<(i64, i64), Scalar>>;

/// `Σ_π (-1)^{|π|-1}(|π|-1)! Π_B D_B` at total `ħ^h`.
fn connected(d: &Supports, n: usize, h: i64) -> BTreeMap<i64, Scalar> {
    let mut out: BTreeMap<i64, Scalar> = BTreeMap::new();
    for part in set_partitions(n) {
        let mut acc: BTreeMap<(i64, i64), Scalar> = BTreeMap::from([((0, 0), one())]);
        for b in &part {
            let Some(db) = d.get(b) else {
                acc.clear();
                break;
            };
            let mut next: BTreeMap<(i64, i64), Scalar> = BTreeMap::new();
            for ((h1, o1), c1) in &acc {
                for ((h2, o2), c2) in db {
                    if h1 + h2 <= h {
                        *next.entry((h1 + h2, o1 + o2)).or_insert_with(Scalar::zero) += c1 * c2;
                    }
                }
            }
            acc = next;
        }
        let w = cumulant_weight(part.len());
        for ((hh, o), c) in acc {
            if hh == h {
                *out.entry(o).or_insert_with(Scalar::zero) += c * &w;
            }
        }
    }
    out.retain(|_, v| !v.is_zero());
    out
}

/// Which kind of special point a locally expanded vertex sits at.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocalKind {
    /// A pole of `dy` where `dx` is regular and nonzero.
    PoleOfDy,
    /// A simple pole of `dx` where `dy` is regular and nonzero.
    SimplePoleOfDx,
}

struct Expansion {
    kind: LocalKind,
    a: Scalar,
}

fn family_get(family: &Family, g: u32, n: usize) -> Result<&FactorizedDifferential> {
    family.get(&(g, n)).ok_or_else(|| Error::MissingInput(format!("input ω({g},{n}) missing")))
}

/// Number of distinct orderings of a sorted key.
fn perms(k: &[PoleForm]) -> Scalar {
    let mut r = factorial(k.len());
    let mut run = 1;
    for w in 1..=k.len() {
        if w < k.len() && k[w] == k[w - 1] {
            run += 1;
        } else {
            r /= factorial(run);
            run = 1;
        }
    }
    r
}

fn trie(entries: &[(Vec<PoleForm>, Scalar)], depth: usize, prefix: &Jet, legs: &HashMap<PoleForm, Jet>, ctx: &Ctx, out: &mut Jet) {
    let mut start = 0;
    while start < entries.len() {
        let pf = &entries[start].0[depth];
        let mut end = start + 1;
        while end < entries.len() && &entries[end].0[depth] == pf {
            end += 1;
        }
        let p = prefix.mul(&legs[pf], ctx);
        if !p.is_zero() {
            if depth + 1 == entries[start].0.len() {
                for (_, c) in &entries[start..end] {
                    out.add_scaled(&p, c);
                }
            } else {
                trie(&entries[start..end], depth + 1, &p, legs, ctx, out);
            }
        }
        start = end;
    }
}

/// Core of the swap.  Vertex 0 is expanded when `exp` is given; the result
/// maps the order in `z_1 - a` (or 0) to its coefficient.
fn swap_core(curve: &SpectralCurve, family: &Family, g: u32, n: usize, z: &[Scalar], exp: Option<Expansion>) -> Result<BTreeMap<i64, Scalar>> {
    if n == 0 || z.len() != n || 2 * g as i64 - 2 + n as i64 <= 0 {
        return Err(Error::InvalidArgument("swap needs a stable (g, n) and n points".into()));
    }
    let hp = swap_budget(g, n);
    let mut ctx = Ctx::new(n, hp, 1, true)?;
    let first = if exp.is_some() { 1 } else { 0 };
    check_regular(curve, &z[first..])?;
    if let Some(e) = &exp {
        if z[1..].contains(&e.a) {
            return Err(Error::InvalidArgument("expansion point repeated".into()));
        }
        let (ox, oy) = (curve.dx.order_at(&e.a), curve.dy.order_at(&e.a));
        let ok = match e.kind {
            LocalKind::PoleOfDy => ox == 0 && oy < 0,
            LocalKind::SimplePoleOfDx => ox == -1 && oy == 0,
        };
        if !ok {
            return Err(Error::InvalidArgument(format!("{} is not of kind {:?}", e.a, e.kind)));
        }
        ctx.expand = Some(match e.kind {
            LocalKind::PoleOfDy => ExpandRule { vertex: 0, base: -2, u_weight: 0, h_weight: 2 },
            LocalKind::SimplePoleOfDx => ExpandRule { vertex: 0, base: -1, u_weight: 1, h_weight: 3 },
        });
    }
    let prec = 4 * hp + 12;
    let sites: Vec<Site> = z.iter().enumerate().map(|(i, c)| Site { i, c: c.clone(), prec }).collect();
    let xp = &curve.dx;
    let yp = &curve.dy;
    let s_co = sfun_coeffs(hp as usize);
    let ixr = xp.recip()?;
    let ixs: Vec<Series> = sites.iter().map(|s| s.ser(&ixr)).collect();

    // D^k z for the shifts
    let mut zds: Vec<Vec<Series>> = Vec::new();
    let mut ws: Vec<[Jet; 2]> = Vec::new();
    for s in &sites {
        let f = iter_ser(s.ser(&RationalFunction::z()), &ixs[s.i], hp as usize + 1);
        ws.push([shift_jet(s, &f, 1, &ctx)?, shift_jet(s, &f, -1, &ctx)?]);
        zds.push(f);
    }

    // edges of type (0, 2) between distinct vertices
    let mut acc = Jet::one();
    for i in 0..n {
        for j in i + 1..n {
            let r = cross_ratio(&sites[i], &sites[j], &ws[i], &ws[j], &ctx)?;
            acc = acc.mul(&r, &ctx);
        }
    }

    // stable hyperedges
    let mut legs: HashMap<PoleForm, Jet> = HashMap::new();
    let mut s_sum = Jet::zero();
    for k in 2..=((hp + 2) / 2) as usize {
        for gt in 0..=((hp + 2 - 2 * k as i64) / 2) as u32 {
            let cost = 2 * k as i64 - 2 + 2 * gt as i64 + (n as i64 - k as i64).max(0);
            if (k == 2 && gt == 0) || cost > hp {
                continue;
            }
            let w = family_get(family, gt, k)?;
            let mut entries: Vec<(Vec<PoleForm>, Scalar)> =
                w.terms().filter(|(key, _)| key.windows(2).all(|p| p[0] <= p[1])).map(|(key, c)| (key.clone(), c * perms(key))).collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            for (key_, _) in &entries {
                for pf in key_ {
                    if !legs.contains_key(pf) {
                        let base = RationalFunction::pole(&pf.q, pf.d as usize, one()).div(xp)?;
                        let mut l = Jet::zero();
                        for s in &sites {
                            let it = iter_ser(s.ser(&base), &ixs[s.i], hp as usize);
                            for m in 0..=(hp as usize / 2) {
                                l.add_assign(&s.jet_series(&it[2 * m], 2 * m as i64 + 1, 2 * m as i64 + 1, &s_co[m], &ctx)?);
                            }
                        }
                        legs.insert(pf.clone(), l);
                    }
                }
            }
            // one ħ of the weight travels with each leg
            let w0 = cost - (n as i64 - k as i64).max(0) - k as i64;
            let prefix = Jet::monomial(one() / factorial(k), key(w0, &[]));
            trie(&entries, 0, &prefix, &legs, &ctx, &mut s_sum);
        }
    }
    if !s_sum.is_zero() {
        let e = s_sum.exp(&ctx)?;
        acc = acc.mul(&e, &ctx);
    }

    // vertex factors, then reduction
    let ydx = yp.div(xp)?;
    let gmax = ((hp - (n as i64 - 1)) / 2).max(0) as u32;
    let mut vert_in: Vec<(u32, RationalFunction)> = Vec::new();
    for gt in 1..=gmax {
        vert_in.push((gt, family_get(family, gt, 1)?.to_rational()?.div(xp)?));
    }
    let rho = xp.div(yp)?;
    let iy = yp.recip()?;
    let mut supports: Supports = HashMap::new();
    for i in (0..n).rev() {
        let s = &sites[i];
        let mut x = self_loop(s, &zds[i], &s.ser(xp), &ctx)?;
        let dy_it = iter_ser(s.ser(&ydx), &ixs[i], hp as usize);
        for m in 1..=(hp as usize / 2) {
            // D^{2m} y = D^{2m-1}(y'/x')
            x.add_assign(&s.jet_series(&dy_it[2 * m - 1], 2 * m as i64, 2 * m as i64 + 1, &-&s_co[m], &ctx)?);
        }
        for (gt, w) in &vert_in {
            let it = iter_ser(s.ser(w), &ixs[i], hp as usize);
            for m in 0..=(hp as usize / 2) {
                let h = 2 * m as i64 + 2 * *gt as i64;
                if h <= hp {
                    x.add_assign(&s.jet_series(&it[2 * m], h, 2 * m as i64 + 1, &s_co[m], &ctx)?);
                }
            }
        }
        acc = acc.mul(&x.exp(&ctx)?, &ctx);
        if i == 0 && exp.is_some() {
            break;
        }
        let rs = s.ser(&rho);
        let iys = s.ser(&iy);
        let tab = |rmax: i64| table(&rs, |f| &iys * &f.derivative(), rmax);
        acc = reduce(&acc, i, &tab, 1, true, 1)?;
    }

    // accumulate by support
    let mut cache: HashMap<(i64, i64), Series> = HashMap::new();
    for (k, c) in &acc.terms {
        let mut mask = 0u32;
        let mut stray = false;
        for i in 0..n {
            if u_of(*k, i) > 0 {
                mask |= 1 << i;
            } else if e_of(*k, i) != 0 {
                stray = true;
            }
        }
        if stray {
            continue;
        }
        let h = h_of(*k);
        let entry = supports.entry(mask).or_default();
        match &exp {
            Some(e) if mask & 1 == 1 => {
                let (u, t) = (u_of(*k, 0), e_of(*k, 0));
                let phi = match cache.get(&(u - 1, t)) {
                    Some(p) => p.clone(),
                    None => {
                        let mut f = rho.mul(&z_minus(&e.a).pow(t)?);
                        for _ in 0..u - 1 {
                            f = f.derivative().mul(&iy);
                        }
                        let p = f.laurent(&Point::Finite(e.a.clone()), 0);
                        cache.insert((u - 1, t), p.clone());
                        p
                    }
                };
                for (o, v) in phi.terms() {
                    if o < 0 {
                        *entry.entry((h, o)).or_insert_with(Scalar::zero) += c * v;
                    }
                }
            }
            _ => *entry.entry((h, 0)).or_insert_with(Scalar::zero) += c,
        }
    }
    let sign = if n.is_multiple_of(2) { one() } else { q(-1) };
    let mut out = connected(&supports, n, hp);
    for v in out.values_mut() {
        *v *= &sign;
    }
    Ok(out)
}

/// `ω^∨(g,n)/Π dy_i` at the points `z`, for the swapped curve `(y, x)`,
/// computed from the LogTR family of `curve` (which must contain all
/// `(g', n')` with `2g'-2+n' <= 2g-2+n`).
pub fn xy_swap(curve: &SpectralCurve, family: &Family, g: u32, n: usize, z: &[Scalar]) -> Result<Scalar> {
    let r = swap_core(curve, family, g, n, z, None)?;
    Ok(r.get(&0).cloned().unwrap_or_else(Scalar::zero))
}

/// Largest `ħ` degree kept by [`xy_swap`]; every `u` degree is bounded by it.
pub fn swap_budget(g: u32, n: usize) -> i64 {
    2 * g as i64 - 2 + 2 * n as i64
}

/// Largest `ħ` degree kept by [`closed_trivial_dual`].
pub fn closed_budget(g: u32, n: usize) -> i64 {
    let h = 2 * g as i64 - 2 + n as i64;
    if n == 1 {
        h + 1
    } else {
        h
    }
}

/// `n` distinct rational points where `dx` and `dy` of every curve are
/// regular and nonzero.
pub fn sample_points(curves: &[&SpectralCurve], n: usize) -> Vec<Scalar> {
    let mut out: Vec<Scalar> = Vec::new();
    let mut k = 0i64;
    while out.len() < n {
        for c in [Scalar::new((2 * k + 7).into(), 2.into()), q(k + 3)] {
            let ok = curves.iter().all(|cv| cv.dx.order_at(&c) == 0 && cv.dy.order_at(&c) == 0);
            if ok && !out.contains(&c) && out.len() < n {
                out.push(c);
            }
        }
        k += 1;
    }
    out
}

/// Principal part at `a` in the first variable of `ω^∨(g,n)/dy_1 Π_{i>1} dy_i`,
/// the others fixed at `rest`; returned as a series in `z_1 - a` known
/// below order 0.
pub fn xy_swap_local(curve: &SpectralCurve, family: &Family, g: u32, n: usize, a: &Scalar, kind: LocalKind, rest: &[Scalar]) -> Result<Series> {
    let mut z = vec![a.clone()];
    z.extend_from_slice(rest);
    let r = swap_core(curve, family, g, n, &z, Some(Expansion { kind, a: a.clone() }))?;
    let Some((&lo, _)) = r.iter().next() else {
        return Ok(Series::big_o(0));
    };
    let c: Vec<Scalar> = (lo..0).map(|o| r.get(&o).cloned().unwrap_or_else(Scalar::zero)).collect();
    Ok(Series::new(lo, c, Some(0)))
}

/// One deformed log term `mult · (1/(α𝒮(αħ∂_y))) log(z - a)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HatTerm {
    pub a: Scalar,
    pub alpha: Scalar,
    pub mult: i64,
}

/// The deformed `x̂ = x + Σ_k ħ^{2k} x̂_k`; only the log terms listed here
/// are deformed.
#[derive(Clone, Debug, PartialEq)]
pub struct HatX {
    pub terms: Vec<HatTerm>,
}

/// How log terms of `x` are deformed.
#[derive(Clone, Debug, PartialEq)]
pub enum HatXMode {
    /// Each vital log term with its own residue.
    PerResidue,
    /// Like `PerResidue`, except that the listed points (with integer
    /// coefficient `c`) split into `|c|` unit terms of sign `c`.
    Split(Vec<Scalar>),
}

impl HatX {
    /// The rational correction `x̂_k`, `k >= 1`.
    pub fn correction(&self, curve: &SpectralCurve, k: u32) -> Result<RationalFunction> {
        let mut f = RationalFunction::zero();
        for t in &self.terms {
            let d = log_deformation(&curve.dy, &t.a, &t.alpha, k)?.div(&curve.dy)?;
            f = f.add(&d.scale(&q(t.mult)));
        }
        Ok(f)
    }
}

/// Deformation of the log terms of `x` at simple poles of `dx` where `dy`
/// is regular.
pub fn hat_x(curve: &SpectralCurve, mode: &HatXMode) -> Result<HatX> {
    let split: &[Scalar] = match mode {
        HatXMode::PerResidue => &[],
        HatXMode::Split(p) => p,
    };
    for p in split {
        if !curve.x.log_terms().iter().any(|(a, _)| a == p) {
            return Err(Error::InvalidArgument(format!("{p} is not a log point of x")));
        }
    }
    let mut terms = Vec::new();
    for (a, c) in curve.x.log_terms() {
        if curve.dx.order_at(a) != -1 || curve.dy.order_at(a) < 0 {
            continue;
        }
        if split.contains(a) {
            if !is_integer(c) {
                return Err(Error::InvalidArgument(format!("coefficient {c} at {a} is not an integer")));
            }
            let s = if c.is_positive() { one() } else { q(-1) };
            terms.push(HatTerm { a: a.clone(), alpha: s, mult: c.abs().to_integer().try_into().map_err(|_| Error::CapExceeded("multiplicity".into()))? });
        } else {
            terms.push(HatTerm { a: a.clone(), alpha: c.recip(), mult: 1 });
        }
    }
    Ok(HatX { terms })
}

/// The chart in which `dy` has no zeros.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Chart {
    Linear,
    Log,
}

fn chart(curve: &SpectralCurve) -> Result<Chart> {
    let y = &curve.y;
    if y.log_terms().is_empty() && y.rational == RationalFunction::z() {
        return Ok(Chart::Linear);
    }
    if y.rational.is_zero() && y.log_terms() == [(Scalar::zero(), one())] {
        return Ok(Chart::Log);
    }
    Err(Error::ChangeChart("the closed formula needs y = z or y = log z".into()))
}

/// `e^{s uħ/2} - 1` at vertex `i`.
fn exp_half(i: usize, s: i64, ctx: &Ctx) -> Jet {
    let mut out = Jet::zero();
    for k in 1..=ctx.hmax {
        let c = pow(&Scalar::new(s.into(), 2.into()), k) / factorial(k as usize);
        out.add_term(key(k, &[(i, k, 0)]), c);
    }
    out
}

/// Closed formula for curves with `y = z` or `y = log z`: the value of
/// `ω(g,n)/Π dz_i` at `z`.
pub fn closed_trivial_dual(curve: &SpectralCurve, g: u32, n: usize, hx: &HatX, z: &[Scalar]) -> Result<Scalar> {
    if !curve.has_trivial_dual() {
        return Err(Error::AssumptionViolation("dy has zeros".into()));
    }
    let ch = chart(curve)?;
    if n == 0 || z.len() != n || 2 * g as i64 - 2 + n as i64 <= 0 {
        return Err(Error::InvalidArgument("closed formula needs a stable (g, n) and n points".into()));
    }
    check_regular(curve, z)?;
    let hmax = closed_budget(g, n);
    let shift = if n == 1 { 1 } else { 0 };
    let ctx = Ctx::new(n, hmax, shift, n == 1)?;
    let prec = 4 * hmax + 12;
    let sites: Vec<Site> = z.iter().enumerate().map(|(i, c)| Site { i, c: c.clone(), prec }).collect();
    let zj = |s: &Site| -> Jet {
        let mut j = s.eps();
        j.add_term(key(0, &[]), s.c.clone());
        j
    };

    let mut acc = if n == 1 {
        let s = &sites[0];
        match ch {
            Chart::Linear => Jet::one(),
            Chart::Log => {
                let inv = inv_sfun_coeffs(hmax as usize);
                let mut f = Jet::zero();
                for m in 0..=(hmax / 2) {
                    f.add_term(key(2 * m, &[(0, 2 * m, 0)]), inv[m as usize].clone());
                }
                let iz = Series::exact(0, vec![one(), s.c.recip()]).recip(prec)?.scale(&s.c.recip());
                f.mul(&s.jet_series(&iz, 0, 0, &one(), &ctx)?, &ctx)
            }
        }
    } else {
        // P_ij = 1/(w_i - w̄_j)
        let mut p: Vec<Vec<Jet>> = vec![vec![Jet::zero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let d = &sites[i].c - &sites[j].c;
                let num = match ch {
                    Chart::Linear => {
                        let mut x = sites[i].eps();
                        x.add_scaled(&sites[j].eps(), &q(-1));
                        let half = Scalar::new(1.into(), 2.into());
                        x.add_term(key(1, &[(i, 1, 0)]), half.clone());
                        x.add_term(key(1, &[(j, 1, 0)]), half);
                        x
                    }
                    Chart::Log => {
                        let mut ei = exp_half(i, 1, &ctx);
                        ei.add_term(key(0, &[]), one());
                        let mut ej = exp_half(j, -1, &ctx);
                        ej.add_term(key(0, &[]), one());
                        let mut x = ei.mul(&zj(&sites[i]), &ctx);
                        x.add_scaled(&ej.mul(&zj(&sites[j]), &ctx), &q(-1));
                        x.add_term(key(0, &[]), -d.clone());
                        x
                    }
                };
                p[i][j] = num.scale(&d.recip()).recip1p(&ctx)?.scale(&d.recip());
            }
        }
        let mut out = Jet::zero();
        cycles(&p, 0, 1, &Jet::one(), &ctx, &mut out);
        out
    };

    let s_co = sfun_coeffs(hmax as usize);
    let xp = &curve.dx;
    let yp = &curve.dy;
    let xy = xp.div(yp)?;
    let iy = yp.recip()?;
    let mut corr: Vec<RationalFunction> = Vec::new();
    for k in 1..=(hmax / 2) as u32 {
        corr.push(hx.correction(curve, k)?);
    }
    let ix = xp.recip()?;
    for i in (0..n).rev() {
        let s = &sites[i];
        let iys = s.ser(&iy);
        let dxy = iter_ser(s.ser(&xy), &iys, hmax as usize);
        let mut y = Jet::zero();
        for m in 1..=(hmax as usize / 2) {
            y.add_assign(&s.jet_series(&dxy[2 * m - 1], 2 * m as i64, 2 * m as i64 + 1, &-&s_co[m], &ctx)?);
        }
        for (k1, c) in corr.iter().enumerate() {
            let k = k1 as i64 + 1;
            let it = iter_ser(s.ser(c), &iys, hmax as usize);
            for m in 0..=(hmax as usize / 2) {
                let h = 2 * m as i64 + 2 * k;
                if h <= hmax {
                    y.add_assign(&s.jet_series(&it[2 * m], h, 2 * m as i64 + 1, &-&s_co[m], &ctx)?);
                }
            }
        }
        acc = acc.mul(&y.exp(&ctx)?, &ctx);
        let ixs = s.ser(&ix);
        let tab = |rmax: i64| table(&Series::one().truncate(prec), |f| (f * &ixs).derivative(), rmax);
        acc = reduce(&acc, i, &tab, shift, false, if n == 1 { 1 } else { 0 })?;
    }
    let mut v = Scalar::zero();
    for (k, c) in &acc.terms {
        if h_of(*k) == hmax {
            v += c;
        }
    }
    Ok(-v)
}

fn cycles(p: &[Vec<Jet>], cur: usize, seen: u32, prefix: &Jet, ctx: &Ctx, out: &mut Jet) {
    let n = p.len();
    if seen.count_ones() as usize == n {
        out.add_assign(&prefix.mul(&p[cur][0], ctx));
        return;
    }
    for nxt in 1..n {
        if seen & (1 << nxt) == 0 {
            let q2 = prefix.mul(&p[cur][nxt], ctx);
            if !q2.is_zero() {
                cycles(p, nxt, seen | (1 << nxt), &q2, ctx, out);
            }
        }
    }
}

/// Simple-graph formula for curves with `x = y - log z` and no vital
/// points: the value of `ω(g,n)/Π (-dx_i)` at `z`.
pub fn family2_npoint(curve: &SpectralCurve, g: u32, n: usize, z: &[Scalar]) -> Result<Scalar> {
    let diff = curve.y.sub(&curve.x);
    if !(diff.rational.is_zero() && diff.log_terms() == [(Scalar::zero(), one())]) {
        return Err(Error::AssumptionViolation("x must equal y - log z".into()));
    }
    if !curve.vital.is_empty() {
        return Err(Error::AssumptionViolation("the curve has vital points".into()));
    }
    if n == 0 || z.len() != n || 2 * g as i64 - 2 + n as i64 <= 0 {
        return Err(Error::InvalidArgument("needs a stable (g, n) and n points".into()));
    }
    check_regular(curve, z)?;
    if z.iter().any(|c| c.is_zero()) {
        return Err(Error::InvalidArgument("sample point at 0".into()));
    }
    let hp = 2 * g as i64 - 2 + 2 * n as i64;
    let ctx = Ctx::new(n, hp, 1, true)?;
    let prec = 3 * hp + 10;
    let sites: Vec<Site> = z.iter().enumerate().map(|(i, c)| Site { i, c: c.clone(), prec }).collect();
    let s_co = sfun_coeffs(hp as usize);
    let inv = inv_sfun_coeffs(hp as usize);

    // w = e^{uħ/2} z: the shifts with D^k z = z
    let mut ws: Vec<[Jet; 2]> = Vec::new();
    for s in &sites {
        let zs = s.ser(&RationalFunction::z());
        let f = vec![zs; hp as usize + 1];
        ws.push([shift_jet(s, &f, 1, &ctx)?, shift_jet(s, &f, -1, &ctx)?]);
    }
    let mut acc = Jet::one();
    for i in 0..n {
        for j in i + 1..n {
            acc = acc.mul(&cross_ratio(&sites[i], &sites[j], &ws[i], &ws[j], &ctx)?, &ctx);
        }
    }

    let ylog = crate::curve::LogRationalFunction::new(RationalFunction::zero(), curve.y.log_terms().to_vec()).derivative();
    let yd = iterate_euler(&curve.y.derivative().mul(&RationalFunction::z()), hp as usize);
    let logd = iterate_euler(&ylog.mul(&RationalFunction::z()), hp as usize);
    let xp = &curve.dx;
    let ix = xp.recip()?;
    let zeta = xp.mul(&RationalFunction::z()).recip()?.scale(&q(-1));
    for i in (0..n).rev() {
        let s = &sites[i];
        let mut y = Jet::zero();
        for m in 1..=(hp as usize / 2) {
            y.add_assign(&s.jet(&yd[2 * m - 1], 2 * m as i64, 2 * m as i64 + 1, &s_co[m], &ctx)?);
        }
        for k in 1..=(hp as usize / 2) {
            for m in 0..=(hp as usize / 2) {
                let h = 2 * (m + k) as i64;
                if h <= hp {
                    // D^{2m} ŷ_k = invS_k D^{2m+2k}(log part)
                    let c = &s_co[m] * &inv[k];
                    y.add_assign(&s.jet(&logd[2 * (m + k) - 1], h, 2 * m as i64 + 1, &c, &ctx)?);
                }
            }
        }
        let mut v = y.exp(&ctx)?;
        let mut isf = Jet::zero();
        for m in 0..=(hp / 2) {
            isf.add_term(key(2 * m, &[(i, 2 * m, 0)]), inv[m as usize].clone());
        }
        v = v.mul(&isf, &ctx);
        acc = acc.mul(&v, &ctx);
        let ixs = s.ser(&ix);
        let tab = |rmax: i64| table(&s.ser(&zeta), |f| -(&ixs * &f.derivative()), rmax);
        acc = reduce(&acc, i, &tab, 1, true, 1)?;
    }
    let mut supports: Supports = HashMap::new();
    for (k, c) in &acc.terms {
        let mut mask = 0u32;
        for i in 0..n {
            if u_of(*k, i) > 0 {
                mask |= 1 << i;
            }
        }
        *supports.entry(mask).or_default().entry((h_of(*k), 0)).or_insert_with(Scalar::zero) += c;
    }
    Ok(connected(&supports, n, hp).get(&0).cloned().unwrap_or_else(Scalar::zero))
}

/// The constants `q_0..q_K` and `s_1..s_K` of a power series `y` in
/// `t = z - p` at a simple zero `p` of `dx`, with `ξ_k = (-∂_x)^{k+1} y_0`
/// built from the curve's own `y_0`.
pub fn kappa_parameters(curve: &SpectralCurve, p: &Scalar, y: &Series, k: usize) -> Result<(Vec<Scalar>, Vec<Scalar>)> {
    if curve.dx.order_at(p) != 1 {
        return Err(Error::InvalidArgument(format!("{p} is not a simple zero of dx")));
    }
    if y.coeff(1)?.is_zero() {
        return Err(Error::AssumptionViolation("y'(p) = 0".into()));
    }
    let pt = Point::Finite(p.clone());
    let xp = &curve.dx;
    let mut xi = curve.y.derivative().div(xp)?.scale(&q(-1));
    let mut qs = Vec::new();
    let prec = 2 * k as i64 + 4;
    let dxs = xp.laurent(&pt, prec);
    for _ in 0..=k {
        xi = d_by(&xi, xp)?.scale(&q(-1));
        // q = -res ξ_{k+1} y dx
        let xs = xi.laurent(&pt, prec);
        let r = (&(&xs * y) * &dxs).residue()?;
        qs.push(-r);
    }
    if qs[0].is_zero() {
        return Err(Error::AssumptionViolation("q_0 = 0".into()));
    }
    let norm = Series::new(0, qs.iter().map(|x| x / &qs[0]).collect(), Some(k as i64 + 1));
    let l = norm.log(k as i64 + 1)?;
    let s = (1..=k).map(|i| -l.coeff_unchecked(i as i64)).collect();
    Ok((qs, s))
}
