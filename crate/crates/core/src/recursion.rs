//! Residue recursion for TR and LogTR, plus loop-equation and projection
//! checks.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use num_traits::Zero;
use rayon::prelude::*;

use crate::curve::{SpectralCurve, VitalPoint};
use crate::differential::{FactorizedDifferential, Mode, PoleForm};
use crate::error::{Error, Result};
use crate::ratfunc::RationalFunction;
use crate::scalar::{binomial, pow, q, qr, Scalar};
use crate::series::{inv_sfun_coeffs, Point, Series};

/// Compact pole: `(point index << 8) | order`.
pub(crate) type Pole = u16;
pub(crate) type Key = Vec<Pole>;

pub(crate) fn pole(idx: usize, d: u32) -> Pole {
    assert!(idx < 256 && d < 256, "pole index or order out of range");
    ((idx as u16) << 8) | d as u16
}

pub(crate) fn pole_idx(p: Pole) -> usize {
    (p >> 8) as usize
}

pub(crate) fn pole_ord(p: Pole) -> u32 {
    (p & 0xff) as u32
}

/// Families of differentials indexed by `(g, n)`.
pub type Family = BTreeMap<(u32, usize), FactorizedDifferential>;

#[derive(Clone, Debug, Default)]
pub(crate) struct CForm {
    pub n: usize,
    pub terms: HashMap<Key, Scalar>,
}

impl CForm {
    fn add(&mut self, k: Key, c: Scalar) {
        if c.is_zero() {
            return;
        }
        use std::collections::hash_map::Entry;
        match self.terms.entry(k) {
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
    }
}

/// Point table mapping scalars to compact indices.
#[derive(Clone, Debug, Default)]
pub(crate) struct Points {
    pub pts: Vec<Scalar>,
}

impl Points {
    pub fn index(&mut self, p: &Scalar) -> usize {
        match self.pts.iter().position(|x| x == p) {
            Some(i) => i,
            None => {
                self.pts.push(p.clone());
                self.pts.len() - 1
            }
        }
    }

    pub fn compact(&mut self, f: &FactorizedDifferential) -> CForm {
        let mut c = CForm { n: f.n, terms: HashMap::new() };
        for (k, v) in f.terms() {
            let key = k.iter().map(|pf| pole(self.index(&pf.q), pf.d)).collect();
            c.add(key, v.clone());
        }
        c
    }

    pub fn to_form(&self, c: &CForm, g: u32, mode: Mode) -> FactorizedDifferential {
        let mut f = FactorizedDifferential::new(g, c.n, mode);
        for (k, v) in &c.terms {
            let key = k.iter().map(|&p| PoleForm::new(self.pts[pole_idx(p)].clone(), pole_ord(p))).collect();
            f.add_term(key, v.clone()).expect("arity matches");
        }
        f
    }
}

/// Local data at one ramification point for a fixed working order.
pub(crate) struct Local {
    pub r: usize,
    pub p: Scalar,
    pub order: i64,
    pub sigma: Series,
    pub dsigma: Series,
    sig_inv: Series,
    /// `y(p+t) - y(p)`, `x'(p+t)`
    ylocal: Series,
    xprime: Series,
    /// `Q_k` for `k = 1..`, index `k - 1`.
    kernel: Vec<Series>,
    pts: Vec<Scalar>,
    ecache: Mutex<HashMap<Pole, Arc<(Series, Series)>>>,
    pcache: Mutex<HashMap<Pole, Arc<(Series, Series)>>>,
}

impl Local {
    pub fn new(curve: &SpectralCurve, r: usize, pts: &[Scalar], order: i64) -> Result<Local> {
        let p = pts[r].clone();
        let data = curve.local_data(&p, order)?;
        let n = order;
        let sigma = data.deck;
        let dsigma = sigma.derivative();
        let sig_inv = sigma.recip(n)?;
        let xprime = curve.dx.laurent(&Point::Finite(p.clone()), n + 1);
        let ylocal = curve.dy.laurent(&Point::Finite(p.clone()), n + 1).integral()?;
        let den = &data.local_y_diff * &xprime;
        let den_inv = den.recip(n)?;
        let half = qr(1, 2);
        let mut kernel = Vec::new();
        let mut sk = Series::one();
        let mut tk = Series::one();
        let useful = order / 2 + 2;
        let den_inv = den_inv.truncate(useful);
        for _ in 1..=n {
            sk = (&sk * &sigma).truncate(useful + 2);
            tk = tk.shift(1);
            kernel.push((&(&sk - &tk).truncate(useful + 2) * &den_inv).scale(&half));
        }
        Ok(Local {
            r,
            p,
            order,
            sigma,
            dsigma,
            sig_inv,
            ylocal,
            xprime,
            kernel,
            pts: pts.to_vec(),
            ecache: Mutex::new(HashMap::new()),
            pcache: Mutex::new(HashMap::new()),
        })
    }

    /// `(p + t - q)^{-d}` and `(p + σ(t) - q)^{-d}` (no `σ'`), built from
    /// cached powers.
    fn base_powers(&self, pl: Pole) -> Arc<(Series, Series)> {
        if let Some(v) = self.pcache.lock().unwrap().get(&pl) {
            return v.clone();
        }
        let idx = pole_idx(pl);
        let d = pole_ord(pl);
        let n = self.order;
        let v = if d == 1 {
            if idx == self.r {
                (Series::monomial(q(1), -1), self.sig_inv.clone())
            } else {
                let c = &self.p - &self.pts[idx];
                let shifted = &Series::constant(c) + &self.sigma;
                let coeffs: Vec<Scalar> = (0..n).map(|k| binomial(-1, k) * pow(&(&self.p - &self.pts[idx]), -1 - k)).collect();
                (Series::new(0, coeffs, Some(n)), shifted.recip(n).expect("nonzero constant term"))
            }
        } else {
            let prev = self.base_powers(pole(idx, d - 1));
            let one = self.base_powers(pole(idx, 1));
            (&prev.0 * &one.0, &prev.1 * &one.1)
        };
        let v = Arc::new(v);
        self.pcache.lock().unwrap().insert(pl, v.clone());
        v
    }

    /// Expansions of `η(p+t)/dt` and `η(σ(p+t))/dt` for a compact pole.
    fn e(&self, pl: Pole) -> Arc<(Series, Series)> {
        if let Some(v) = self.ecache.lock().unwrap().get(&pl) {
            return v.clone();
        }
        let b = self.base_powers(pl);
        let h = self.useful();
        let v = Arc::new((b.0.truncate(h), (&b.1 * &self.dsigma).truncate(h)));
        self.ecache.lock().unwrap().insert(pl, v.clone());
        v
    }

    /// Orders at or above this are never read by the residues.
    fn useful(&self) -> i64 {
        self.order / 2 + 2
    }

    /// `B(z, σ z)/dt^2`
    fn bergman_diag(&self) -> Result<Series> {
        let diff = &Series::t() - &self.sigma;
        let inv = diff.recip(self.order)?;
        Ok(&(&inv * &inv) * &self.dsigma)
    }

    /// `ω^{(0)}_1` at `z` and at `σ z`, constant `y(p)` dropped.
    fn omega01(&self) -> Result<(Series, Series)> {
        let a = -&(&self.ylocal * &self.xprime);
        let ys = self.ylocal.compose(&self.sigma, self.order)?;
        let b = -&(&ys * &self.xprime);
        Ok((a, b))
    }

    pub fn kernel(&self, k: usize) -> Result<&Series> {
        self.kernel.get(k - 1).ok_or_else(|| Error::InsufficientPrecision(format!("kernel index {k}")))
    }
}

fn is_sorted(k: &[Pole]) -> bool {
    k.windows(2).all(|w| w[0] <= w[1])
}

/// Slot-0 expansions of a stable form over sorted rests.
pub(crate) struct Exp {
    pub s: HashMap<Key, Series>,
    pub ss: HashMap<Key, Series>,
}

fn add_series(map: &mut HashMap<Key, Series>, k: Key, s: Series) {
    match map.get_mut(&k) {
        Some(e) => *e = &*e + &s,
        None => {
            map.insert(k, s);
        }
    }
}

pub(crate) fn expand_first(local: &Local, f: &CForm, sorted_only: bool) -> Exp {
    let mut grouped: HashMap<Key, Vec<(Pole, Scalar)>> = HashMap::new();
    for (k, c) in &f.terms {
        let rest = k[1..].to_vec();
        if sorted_only && !is_sorted(&rest) {
            continue;
        }
        grouped.entry(rest).or_default().push((k[0], c.clone()));
    }
    let items: Vec<(Key, Vec<(Pole, Scalar)>)> = grouped.into_iter().collect();
    let done: Vec<(Key, Series, Series)> = items
        .into_par_iter()
        .map(|(rest, list)| {
            let mut a = Series::zero();
            let mut b = Series::zero();
            for (pl, c) in list {
                let e = local.e(pl);
                a = &a + &e.0.scale(&c);
                b = &b + &e.1.scale(&c);
            }
            (rest, a, b)
        })
        .collect();
    let mut s = HashMap::new();
    let mut ss = HashMap::new();
    for (k, a, b) in done {
        if !a.is_zero() || !a.is_exact() {
            s.insert(k.clone(), a);
        }
        if !b.is_zero() || !b.is_exact() {
            ss.insert(k, b);
        }
    }
    Exp { s, ss }
}

/// Factor in a bracket.
#[derive(Clone)]
pub(crate) enum Factor {
    Omega01,
    Bergman,
    Stable(Arc<CForm>),
}

fn min_val(m: &HashMap<Key, Series>) -> i64 {
    m.values().map(|s| s.val_bound()).min().unwrap_or(i64::MAX / 4)
}

/// Number of ways a sorted `k` restricts to the sorted sub-multiset `r1`.
fn split_multiplicity(k: &[Pole], r1: &[Pole]) -> Scalar {
    let mut acc = q(1);
    let mut i = 0;
    while i < k.len() {
        let v = k[i];
        let mk = k.iter().filter(|&&x| x == v).count() as i64;
        let m1 = r1.iter().filter(|&&x| x == v).count() as i64;
        acc *= binomial(mk, m1);
        i += mk as usize;
    }
    acc
}

fn merge_sorted(a: &[Pole], b: &[Pole]) -> Key {
    let mut k: Key = a.iter().chain(b.iter()).copied().collect();
    k.sort_unstable();
    k
}

/// All distinct orderings of a sorted key.
pub(crate) fn distinct_perms(k: &[Pole]) -> Vec<Key> {
    let mut cur = k.to_vec();
    cur.sort_unstable();
    let mut out = vec![cur.clone()];
    loop {
        let n = cur.len();
        if n < 2 {
            return out;
        }
        let mut i = n - 1;
        while i > 0 && cur[i - 1] >= cur[i] {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        let mut j = n - 1;
        while cur[j] <= cur[i - 1] {
            j -= 1;
        }
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
}

/// Expansion of a factor in its first slot at `z` (`sigma = false`) or
/// `σ z` (`sigma = true`), keyed by sorted rests.
fn factor_expansion(local: &Local, f: &Factor, sigma: bool, kmax: i64, exps: &dyn Fn(&Arc<CForm>) -> Arc<Exp>) -> Result<HashMap<Key, Series>> {
    match f {
        Factor::Omega01 => {
            let (a, b) = local.omega01()?;
            let mut m = HashMap::new();
            m.insert(vec![], if sigma { b } else { a });
            Ok(m)
        }
        Factor::Bergman => {
            // B(z, z_j) = Σ (k+1) t^k η_{p,k+2}(z_j)
            let mut m = HashMap::new();
            let mut pw = if sigma { local.dsigma.clone() } else { Series::one() };
            for k in 0..kmax.max(0) {
                if k > 0 {
                    pw = if sigma { &pw * &local.sigma } else { pw.shift(1) };
                }
                m.insert(vec![pole(local.r, k as u32 + 2)], pw.scale(&q(k + 1)));
            }
            Ok(m)
        }
        Factor::Stable(c) => {
            let e = exps(c);
            Ok(if sigma { e.ss.clone() } else { e.s.clone() })
        }
    }
}

/// The bracket of the recursion (and of the quadratic loop equation) for
/// target `(g, m+1)`, with sorted rests.  Series are truncated below
/// `target`.
pub(crate) fn bracket(
    local: &Local,
    g: u32,
    m: usize,
    target: i64,
    with_omega01: bool,
    factor: &dyn Fn(u32, usize) -> Result<Factor>,
    exps: &(dyn Fn(&Arc<CForm>) -> Arc<Exp> + Sync),
) -> Result<HashMap<Key, Series>> {
    let mut br: HashMap<Key, Series> = HashMap::new();
    // ω^{(g-1)}_{m+2}(z, σz, J)
    if g >= 1 {
        if g == 1 && m == 0 {
            add_series(&mut br, vec![], local.bergman_diag()?.truncate(target));
        } else {
            let f = match factor(g - 1, m + 2)? {
                Factor::Stable(c) => c,
                _ => unreachable!("stable by construction"),
            };
            let mut grouped: HashMap<Key, Vec<(Pole, Pole, Scalar)>> = HashMap::new();
            for (k, c) in &f.terms {
                let rest = k[2..].to_vec();
                if is_sorted(&rest) {
                    grouped.entry(rest).or_default().push((k[0], k[1], c.clone()));
                }
            }
            let items: Vec<_> = grouped.into_iter().collect();
            let parts: Vec<(Key, Series)> = items
                .into_par_iter()
                .map(|(rest, list)| {
                    let mut acc = Series::zero();
                    for (a, b, c) in list {
                        let ea = local.e(a);
                        let eb = local.e(b);
                        let va = ea.0.val_bound();
                        let vb = eb.1.val_bound();
                        let prod = &ea.0.truncate(target - vb) * &eb.1.truncate(target - va);
                        acc = &acc + &prod.scale(&c);
                    }
                    (rest, acc.truncate(target))
                })
                .collect();
            for (k, s) in parts {
                add_series(&mut br, k, s);
            }
        }
    }
    // splits
    let mut classes = Vec::new();
    for g1 in 0..=g {
        for s in 0..=m {
            let g2 = g - g1;
            let s2 = m - s;
            let unstable1 = g1 == 0 && s == 0;
            let unstable2 = g2 == 0 && s2 == 0;
            if !with_omega01 && (unstable1 || unstable2) {
                continue;
            }
            classes.push((g1, s, g2, s2));
        }
    }
    let mut expansions: Vec<(HashMap<Key, Series>, HashMap<Key, Series>)> = Vec::new();
    for &(g1, s, g2, s2) in &classes {
        let f1 = factor(g1, s + 1)?;
        let f2 = factor(g2, s2 + 1)?;
        // valuations of the partner bound how far the Bergman factor is needed
        let pre1 = if matches!(f1, Factor::Bergman) { None } else { Some(factor_expansion(local, &f1, false, 0, exps)?) };
        let pre2 = if matches!(f2, Factor::Bergman) { None } else { Some(factor_expansion(local, &f2, true, 0, exps)?) };
        let v1 = pre1.as_ref().map(min_val).unwrap_or(0);
        let v2 = pre2.as_ref().map(min_val).unwrap_or(0);
        let e1 = match pre1 {
            Some(e) => e,
            None => factor_expansion(local, &f1, false, target - v2, exps)?,
        };
        let e2 = match pre2 {
            Some(e) => e,
            None => factor_expansion(local, &f2, true, target - v1, exps)?,
        };
        expansions.push((e1, e2));
    }
    let parts: Vec<HashMap<Key, Series>> = classes
        .par_iter()
        .zip(expansions.par_iter())
        .map(|(_, (e1, e2))| {
            let v1 = min_val(e1);
            let v2 = min_val(e2);
            let t1: Vec<(&Key, Series)> = e1.iter().map(|(k, s)| (k, s.truncate(target - v2))).collect();
            let t2: Vec<(&Key, Series)> = e2.iter().map(|(k, s)| (k, s.truncate(target - v1))).collect();
            let mut out: HashMap<Key, Series> = HashMap::new();
            for (k1, s1) in &t1 {
                for (k2, s2) in &t2 {
                    if s1.val_bound() + s2.val_bound() >= target && s1.is_exact() && s2.is_exact() {
                        continue;
                    }
                    let prod = s1 * s2;
                    if prod.is_zero() && prod.prec().is_some_and(|p| p >= target) {
                        continue;
                    }
                    let k = merge_sorted(k1, k2);
                    let mult = split_multiplicity(&k, k1);
                    add_series(&mut out, k, prod.truncate(target).scale(&mult));
                }
            }
            out
        })
        .collect();
    for part in parts {
        for (k, s) in part {
            add_series(&mut br, k, s);
        }
    }
    Ok(br)
}

fn stable(g: u32, n: usize) -> bool {
    2 * g as i64 - 2 + n as i64 > 0
}

/// Coefficient of `dz` of `[ħ^{2g}] (1/(α 𝒮(α ħ ∂_x))) log(z - a) dx`.
pub fn log_deformation(dx: &RationalFunction, a: &Scalar, alpha: &Scalar, g: u32) -> Result<RationalFunction> {
    // ∂_x log(z - a) = 1/((z - a) x')
    let mut h = RationalFunction::pole(a, 1, q(1)).div(dx)?;
    if g == 0 {
        return Err(Error::InvalidArgument("deformation is defined for g >= 1".into()));
    }
    for _ in 1..2 * g {
        h = h.derivative().div(dx)?;
    }
    let s = &inv_sfun_coeffs(g as usize)[g as usize];
    let c = s * pow(alpha, 2 * g as i64 - 1);
    Ok(h.mul(dx).scale(&c))
}

/// Principal part at `a` of a rational `f dz` as a pole-basis form.
pub(crate) fn principal_part_at(f: &RationalFunction, a: &Scalar, g: u32, mode: Mode) -> FactorizedDifferential {
    let s = f.laurent(&Point::Finite(a.clone()), 0);
    let mut out = FactorizedDifferential::new(g, 1, mode);
    for (k, c) in s.terms() {
        if k < 0 {
            out.add_term(vec![PoleForm::new(a.clone(), (-k) as u32)], c.clone()).unwrap();
        }
    }
    out
}

/// For each vital point, the principal part at `a` of
/// `[ħ^{2g}] (1/(α𝒮(αħ∂_x))) log(z - a) dx`.
pub fn log_correction(curve: &SpectralCurve, g: u32) -> Result<Vec<(VitalPoint, FactorizedDifferential)>> {
    if g == 0 {
        return Err(Error::InvalidArgument("log correction needs g >= 1".into()));
    }
    curve
        .vital
        .iter()
        .map(|v| {
            let f = log_deformation(&curve.dx, &v.a, &v.alpha, g)?;
            Ok((v.clone(), principal_part_at(&f, &v.a, g, Mode::LogTr)))
        })
        .collect()
}

type MemoKey = (Mode, u32, usize);
type ExpKey = (Mode, u32, usize, usize, i64);

/// Memoizing recursion engine bound to one curve.
pub struct Engine {
    curve: SpectralCurve,
    pts: Vec<Scalar>,
    n_ram: usize,
    memo: Mutex<HashMap<MemoKey, Arc<CForm>>>,
    windows: Mutex<HashMap<MemoKey, i64>>,
    locals: Mutex<HashMap<(usize, i64), Arc<Local>>>,
    exps: Mutex<HashMap<ExpKey, Arc<Exp>>>,
}

pub fn initial_window(g: u32, n: usize) -> i64 {
    2 * (6 * g as i64 + 2 * n as i64) + 8
}

impl Engine {
    pub fn new(curve: SpectralCurve) -> Engine {
        let mut pts: Vec<Scalar> = curve.ram_points();
        let n_ram = pts.len();
        pts.extend(curve.vital_points());
        Engine {
            curve,
            pts,
            n_ram,
            memo: Mutex::new(HashMap::new()),
            windows: Mutex::new(HashMap::new()),
            locals: Mutex::new(HashMap::new()),
            exps: Mutex::new(HashMap::new()),
        }
    }

    pub fn curve(&self) -> &SpectralCurve {
        &self.curve
    }

    /// Working order used for a computed `(g, n)`.
    pub fn window(&self, mode: Mode, g: u32, n: usize) -> Option<i64> {
        let mode = self.effective_mode(mode);
        self.windows.lock().unwrap().get(&(mode, g, n)).copied()
    }

    fn effective_mode(&self, mode: Mode) -> Mode {
        // without vital points the two recursions coincide
        if mode == Mode::LogTr && self.curve.vital.is_empty() {
            Mode::Tr
        } else {
            mode
        }
    }

    fn local(&self, r: usize, order: i64) -> Result<Arc<Local>> {
        {
            // any cached local data of at least this order will do
            let locals = self.locals.lock().unwrap();
            if let Some(l) = locals.iter().filter(|((rr, o), _)| *rr == r && *o >= order).min_by_key(|((_, o), _)| *o) {
                return Ok(l.1.clone());
            }
        }
        let l = Arc::new(Local::new(&self.curve, r, &self.pts, order)?);
        self.locals.lock().unwrap().insert((r, order), l.clone());
        Ok(l)
    }

    pub(crate) fn compact(&self, mode: Mode, g: u32, n: usize) -> Result<Arc<CForm>> {
        if !stable(g, n) {
            return Err(Error::InvalidArgument(format!("({g},{n}) is not stable")));
        }
        if !matches!(mode, Mode::Tr | Mode::LogTr) {
            return Err(Error::InvalidArgument("engine computes TR or LogTR only".into()));
        }
        let mode = self.effective_mode(mode);
        if let Some(f) = self.memo.lock().unwrap().get(&(mode, g, n)) {
            return Ok(f.clone());
        }
        // prepare local data at the top order so dependencies share it
        let base = initial_window(g, n);
        (0..self.n_ram).into_par_iter().try_for_each(|r| self.local(r, base).map(|_| ()))?;
        // dependencies first, in increasing complexity
        if g >= 1 && stable(g - 1, n + 1) {
            self.compact(mode, g - 1, n + 1)?;
        }
        for g1 in 0..=g {
            for k in 1..=n {
                if (g1, k) != (g, n) && stable(g1, k) && (2 * g1 as i64 + k as i64) < 2 * g as i64 + n as i64 {
                    self.compact(mode, g1, k)?;
                }
            }
        }
        let mut order = base;
        let f = loop {
            match self.compute_at_order(mode, g, n, order) {
                Ok((f, used)) => {
                    order = used;
                    break f;
                }
                Err(Error::InsufficientPrecision(msg)) => {
                    if order >= 4 * base {
                        // the cap is a hard limit
                        return Err(Error::InsufficientPrecision(format!("cap {order} reached for ({g},{n}): {msg}")));
                    }
                    order *= 2;
                }
                Err(e) => return Err(e),
            }
        };
        // sanity cap on pole orders at ramification points
        let cap = 6 * g as i64 - 4 + 2 * n as i64;
        for k in f.terms.keys() {
            if let Some(&p) = k.iter().find(|&&p| pole_idx(p) < self.n_ram && pole_ord(p) as i64 > cap) {
                return Err(Error::CapExceeded(format!("pole of order {} in ({g},{n}) exceeds {cap}", pole_ord(p))));
            }
        }
        let f = Arc::new(f);
        self.memo.lock().unwrap().insert((mode, g, n), f.clone());
        self.windows.lock().unwrap().insert((mode, g, n), order);
        Ok(f)
    }

    fn exp_for(&self, mode: Mode, g: u32, n: usize, local: &Local) -> Result<Arc<Exp>> {
        let key = (mode, g, n, local.r, local.order);
        if let Some(e) = self.exps.lock().unwrap().get(&key) {
            return Ok(e.clone());
        }
        let f = self.compact(mode, g, n)?;
        let e = Arc::new(expand_first(local, &f, true));
        self.exps.lock().unwrap().insert(key, e.clone());
        Ok(e)
    }

    fn compute_at_order(&self, mode: Mode, g: u32, n: usize, order: i64) -> Result<(CForm, i64)> {
        let m = n - 1;
        let results: Vec<Result<(CForm, i64)>> = (0..self.n_ram)
            .into_par_iter()
            .map(|r| {
                let local = self.local(r, order)?;
                // prefetch expansions so the closure below only reads
                let mut table: HashMap<(u32, usize), Arc<CForm>> = HashMap::new();
                let mut exp_table: HashMap<(u32, usize), Arc<Exp>> = HashMap::new();
                for g1 in 0..=g {
                    // split factors have arity at most n
                    for k in 1..=n {
                        if stable(g1, k) && (g1, k) != (g, n) && g1 <= g {
                            table.insert((g1, k), self.compact(mode, g1, k)?);
                            exp_table.insert((g1, k), self.exp_for(mode, g1, k, &local)?);
                        }
                    }
                }
                if g >= 1 && stable(g - 1, n + 1) {
                    table.insert((g - 1, n + 1), self.compact(mode, g - 1, n + 1)?);
                }
                let factor = |gg: u32, nn: usize| -> Result<Factor> {
                    match (gg, nn) {
                        (0, 1) => Ok(Factor::Omega01),
                        (0, 2) => Ok(Factor::Bergman),
                        _ => table
                            .get(&(gg, nn))
                            .cloned()
                            .map(Factor::Stable)
                            .ok_or_else(|| Error::MissingInput(format!("({gg},{nn})"))),
                    }
                };
                let lookup: HashMap<usize, Arc<Exp>> = table
                    .iter()
                    .filter_map(|(k, c)| exp_table.get(k).map(|e| (Arc::as_ptr(c) as usize, e.clone())))
                    .collect();
                let exps = |c: &Arc<CForm>| -> Arc<Exp> { lookup[&(Arc::as_ptr(c) as usize)].clone() };
                let br = bracket(&local, g, m, 1, false, &factor, &exps)?;
                let mut out = CForm { n, terms: HashMap::new() };
                for (rest, s) in br {
                    if s.is_zero() && s.prec().is_some_and(|p| p >= 1) {
                        continue;
                    }
                    let vb = s.val_bound();
                    let kmax = 1 - vb;
                    for k in 1..=kmax {
                        let qk = local.kernel(k as usize)?;
                        let mut acc = Scalar::zero();
                        // Σ_j Q_k[j] br[-1-j], j >= k-2
                        let mut j = k - 2;
                        while -1 - j >= vb {
                            let b = s.coeff(-1 - j)?;
                            if !b.is_zero() {
                                acc += qk.coeff(j)? * b;
                            }
                            j += 1;
                        }
                        if acc.is_zero() {
                            continue;
                        }
                        for perm in distinct_perms(&rest) {
                            let mut key = Vec::with_capacity(n);
                            key.push(pole(r, k as u32 + 1));
                            key.extend(perm);
                            out.add(key, acc.clone());
                        }
                    }
                }
                Ok((out, local.order))
            })
            .collect();
        let mut total = CForm { n, terms: HashMap::new() };
        let mut used = order;
        for r in results {
            let (f, o) = r?;
            used = used.max(o);
            for (k, c) in f.terms {
                total.add(k, c);
            }
        }
        if mode == Mode::LogTr && n == 1 && g >= 1 {
            for (i, (_, pp)) in log_correction(&self.curve, g)?.into_iter().enumerate() {
                for (k, c) in pp.terms() {
                    total.add(vec![pole(self.n_ram + i, k[0].d)], -c.clone());
                }
            }
        }
        Ok((total, used))
    }

    pub fn compute(&self, mode: Mode, g: u32, n: usize) -> Result<FactorizedDifferential> {
        let c = self.compact(mode, g, n)?;
        Ok(self.to_form(&c, g, mode))
    }

    pub(crate) fn to_form(&self, c: &CForm, g: u32, mode: Mode) -> FactorizedDifferential {
        Points { pts: self.pts.clone() }.to_form(c, g, mode)
    }

    /// All stable `(g, n)` with `2g - 2 + n <= budget`.
    pub fn family(&self, mode: Mode, budget: u32) -> Result<Family> {
        let mut fam = Family::new();
        for (g, n) in budget_pairs(budget) {
            fam.insert((g, n), self.compute(mode, g, n)?);
        }
        Ok(fam)
    }
}

/// Stable `(g, n)`, `n >= 1`, with `2g - 2 + n <= budget`, ordered by
/// complexity then genus.
pub fn budget_pairs(budget: u32) -> Vec<(u32, usize)> {
    let mut v = Vec::new();
    for chi in 1..=budget as i64 {
        for g in 0..=((chi + 1) / 2) {
            let n = chi + 2 - 2 * g;
            if n >= 1 {
                v.push((g as u32, n as usize));
            }
        }
    }
    v
}

pub fn compute_tr(curve: &SpectralCurve, g: u32, n: usize) -> Result<FactorizedDifferential> {
    Engine::new(curve.clone()).compute(Mode::Tr, g, n)
}

pub fn compute_logtr(curve: &SpectralCurve, g: u32, n: usize) -> Result<FactorizedDifferential> {
    Engine::new(curve.clone()).compute(Mode::LogTr, g, n)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopEntry {
    pub g: u32,
    pub n: usize,
    pub point: Scalar,
    pub linear_margin: Option<i64>,
    pub quadratic_margin: Option<i64>,
    pub pass: bool,
}

#[derive(Clone, Debug, Default)]
pub struct LoopReport {
    pub entries: Vec<LoopEntry>,
}

impl LoopReport {
    pub fn pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }
}

/// Checks the linear and quadratic loop equations for every member of
/// `family` at every ramification point.  Margins are the valuation of the
/// combination minus the required one (`None` if it vanishes identically).
pub fn check_loop_equations(family: &Family, curve: &SpectralCurve) -> Result<LoopReport> {
    let mut points = Points { pts: curve.ram_points() };
    let n_ram = points.pts.len();
    let mut compact: HashMap<(u32, usize), Arc<CForm>> = HashMap::new();
    let mut maxd = 0;
    for (&(g, n), f) in family {
        maxd = maxd.max(f.max_pole_order() as i64);
        compact.insert((g, n), Arc::new(points.compact(f)));
    }
    if points.pts.len() > 255 {
        return Err(Error::InvalidArgument("too many pole points".into()));
    }
    let order = 2 * maxd + 12;
    let mut report = LoopReport::default();
    for r in 0..n_ram {
        let local = Local::new(curve, r, &points.pts, order)?;
        let exps_all: HashMap<(u32, usize), Arc<Exp>> = compact
            .iter()
            .map(|(k, c)| (*k, Arc::new(expand_first(&local, c, true))))
            .collect();
        let lookup: HashMap<usize, Arc<Exp>> = compact
            .iter()
            .map(|(k, c)| (Arc::as_ptr(c) as usize, exps_all[k].clone()))
            .collect();
        let exps = |c: &Arc<CForm>| -> Arc<Exp> { lookup[&(Arc::as_ptr(c) as usize)].clone() };
        for (&(g, n), c) in &compact {
            // linear: every rest, slot 0
            let full = expand_first(&local, c, false);
            let mut lin: Option<i64> = None;
            for (rest, s) in &full.s {
                let sum = s + full.ss.get(rest).unwrap_or(&Series::zero());
                let v = sum.truncate(1).valuation();
                if let Some(v) = v {
                    lin = Some(lin.map_or(v - 1, |x: i64| x.min(v - 1)));
                }
            }
            for (rest, s) in &full.ss {
                if !full.s.contains_key(rest) {
                    if let Some(v) = s.truncate(1).valuation() {
                        lin = Some(lin.map_or(v - 1, |x: i64| x.min(v - 1)));
                    }
                }
            }
            // quadratic for (g, n-1)
            let factor = |gg: u32, nn: usize| -> Result<Factor> {
                match (gg, nn) {
                    (0, 1) => Ok(Factor::Omega01),
                    (0, 2) => Ok(Factor::Bergman),
                    _ => compact
                        .get(&(gg, nn))
                        .cloned()
                        .map(Factor::Stable)
                        .ok_or_else(|| Error::MissingInput(format!("({gg},{nn})"))),
                }
            };
            let quad = match bracket(&local, g, n - 1, 2, true, &factor, &exps) {
                Ok(br) => {
                    let mut m: Option<i64> = None;
                    for s in br.values() {
                        if let Some(v) = s.truncate(2).valuation() {
                            m = Some(m.map_or(v - 2, |x: i64| x.min(v - 2)));
                        }
                    }
                    Some(m)
                }
                Err(Error::MissingInput(_)) => None,
                Err(e) => return Err(e),
            };
            let pass = lin.is_none() && quad.as_ref().is_none_or(|m| m.is_none());
            report.entries.push(LoopEntry {
                g,
                n,
                point: points.pts[r].clone(),
                linear_margin: lin,
                quadratic_margin: quad.flatten(),
                pass,
            });
        }
    }
    report.entries.sort_by(|a, b| (a.g, a.n, &a.point).cmp(&(b.g, b.n, &b.point)));
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProjectionReport {
    pub support_ok: bool,
    pub principal_ok: bool,
    pub stray_points: Vec<Scalar>,
}

impl ProjectionReport {
    pub fn pass(&self) -> bool {
        self.support_ok && self.principal_ok
    }
}

/// Pole support and vital-point principal parts of one differential.
pub fn check_projection(w: &FactorizedDifferential, curve: &SpectralCurve, mode: Mode) -> Result<ProjectionReport> {
    let ram = curve.ram_points();
    let vital = curve.vital_points();
    let allow_vital = mode == Mode::LogTr && w.n == 1;
    let stray: Vec<Scalar> = w
        .pole_points()
        .into_iter()
        .filter(|p| !ram.contains(p) && !(allow_vital && vital.contains(p)))
        .collect();
    let mut principal_ok = true;
    if allow_vital && w.g >= 1 {
        for (v, pp) in log_correction(curve, w.g)? {
            let got = w.principal_part(&v.a);
            if got.records() != pp.scale(&q(-1)).records() {
                principal_ok = false;
            }
        }
    }
    Ok(ProjectionReport { support_ok: stray.is_empty(), principal_ok, stray_points: stray })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{build_curve, LogRationalFunction};
    use crate::poly::Poly;
    use crate::scalar::qr;

    fn airy() -> SpectralCurve {
        build_curve(
            LogRationalFunction::rational(RationalFunction::from_poly(Poly::from_ints(&[0, 0, 1]))),
            LogRationalFunction::z(),
        )
        .unwrap()
    }

    #[test]
    fn airy_low_terms() {
        let e = Engine::new(airy());
        let w03 = e.compute(Mode::Tr, 0, 3).unwrap();
        let p = PoleForm::new(q(0), 2);
        assert_eq!(w03.len(), 1);
        assert_eq!(w03.coeff(&[p.clone(), p.clone(), p]), qr(1, 2));
        let w11 = e.compute(Mode::Tr, 1, 1).unwrap();
        assert_eq!(w11.len(), 1);
        assert_eq!(w11.coeff(&[PoleForm::new(q(0), 4)]), qr(1, 16));
    }

    #[test]
    fn perms() {
        assert_eq!(distinct_perms(&[1, 1, 2]).len(), 3);
        assert_eq!(distinct_perms(&[1, 2, 3]).len(), 6);
        assert_eq!(distinct_perms(&[]).len(), 1);
        assert_eq!(split_multiplicity(&[1, 1, 2], &[1]), q(2));
    }

    #[test]
    fn budget_listing() {
        assert_eq!(budget_pairs(2), vec![(0, 3), (1, 1), (0, 4), (1, 2)]);
    }

    #[test]
    fn flat_correction() {
        // x = z locally, α = 1: (1/24) dz/(z-a)^2
        let f = log_deformation(&RationalFunction::one(), &q(3), &q(1), 1).unwrap();
        let pp = principal_part_at(&f, &q(3), 1, Mode::LogTr);
        assert_eq!(pp.coeff(&[PoleForm::new(q(3), 2)]), qr(1, 24));
        assert_eq!(pp.len(), 1);
    }

    fn kappa_curve() -> SpectralCurve {
        // x = z - log z, y = log(z + 1)
        build_curve(
            LogRationalFunction::z().add(&LogRationalFunction::log(q(0), q(-1))),
            LogRationalFunction::log(q(-1), q(1)),
        )
        .unwrap()
    }

    #[test]
    fn airy_genus_two() {
        // 2^{-3} <τ_4> 9!! with <τ_4> = 1/1152
        let w = compute_tr(&airy(), 2, 1).unwrap();
        assert_eq!(w.coeff(&[PoleForm::new(q(0), 10)]), qr(105, 1024));
    }

    #[test]
    fn loop_equations_hold_with_vital_point() {
        let e = Engine::new(kappa_curve());
        let fam = e.family(Mode::LogTr, 3).unwrap();
        let rep = check_loop_equations(&fam, e.curve()).unwrap();
        assert!(rep.pass(), "{:?}", rep.entries);
        for w in fam.values() {
            assert!(w.check_symmetry());
            assert!(check_projection(w, e.curve(), Mode::LogTr).unwrap().pass());
        }
        assert!(fam[&(1, 1)].pole_order_at(&q(-1)) > 0);
        // plain TR has no pole there and still satisfies the loop equations
        let tr = e.family(Mode::Tr, 2).unwrap();
        assert_eq!(tr[&(1, 1)].pole_order_at(&q(-1)), 0);
        assert!(check_loop_equations(&tr, e.curve()).unwrap().pass());
    }

    #[test]
    fn corrupted_family_fails() {
        let e = Engine::new(airy());
        let mut fam = e.family(Mode::Tr, 2).unwrap();
        let w = fam.get_mut(&(1, 1)).unwrap();
        w.add_term(vec![PoleForm::new(q(0), 2)], q(1)).unwrap();
        assert!(!check_loop_equations(&fam, e.curve()).unwrap().pass());
    }
}
