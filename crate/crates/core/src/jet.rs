//! Sparse truncated series in `ħ` and per-vertex variables `(u_i, ε_i)`.
//!
//! Monomials are packed into a `u128`: eight bits for the `ħ` degree, then
//! eight bits each for `u_i` and `ε_i` of every vertex.  The `ε` fields carry
//! an offset so that one vertex may hold Laurent data.  Truncation is driven
//! by a [`Ctx`], which drops monomials that cannot reach a wanted final
//! coefficient; it relies on every factor having total `u` degree at most
//! `3/2` of its `ħ` degree.

use std::collections::HashMap;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{one, q, Scalar};
use crate::series::Series;

pub const MAX_VERTICES: usize = 7;
const OFF: i64 = 64;

pub type Key = u128;

fn field(k: Key, f: usize) -> i64 {
    ((k >> (8 * f)) & 0xff) as i64
}

fn offsets() -> Key {
    let mut k: Key = 0;
    for i in 0..MAX_VERTICES {
        k |= (OFF as Key) << (8 * (2 + 2 * i));
    }
    k
}

/// The key of `ħ^h Π u_i^{a_i} ε_i^{b_i}`.
pub fn key(h: i64, parts: &[(usize, i64, i64)]) -> Key {
    let mut k = offsets() | (h as Key);
    for &(i, u, e) in parts {
        k += (u as Key) << (8 * (1 + 2 * i));
        k = (k & !(0xff << (8 * (2 + 2 * i)))) | (((e + OFF) as Key) << (8 * (2 + 2 * i)));
    }
    k
}

/// Replaces the `(u_i, ε_i)` fields of `k`.
pub fn set_vertex(k: Key, i: usize, u: i64, e: i64) -> Key {
    let su = 8 * (1 + 2 * i);
    let se = 8 * (2 + 2 * i);
    let mask: Key = (0xff << su) | (0xff << se);
    (k & !mask) | ((u as Key) << su) | (((e + OFF) as Key) << se)
}

pub fn h_of(k: Key) -> i64 {
    field(k, 0)
}

pub fn u_of(k: Key, i: usize) -> i64 {
    field(k, 1 + 2 * i)
}

pub fn e_of(k: Key, i: usize) -> i64 {
    field(k, 2 + 2 * i) - OFF
}

/// Truncation for one vertex expanded as a Laurent series: its `ε` degree
/// is kept while `ε <= base + u_weight·u + ⌊h_weight·(H - h)/2⌋`.
#[derive(Clone, Copy, Debug)]
pub struct ExpandRule {
    pub vertex: usize,
    pub base: i64,
    pub u_weight: i64,
    pub h_weight: i64,
}

/// Truncation context.
#[derive(Clone, Debug)]
pub struct Ctx {
    pub n: usize,
    /// Largest `ħ` degree kept.
    pub hmax: i64,
    /// Final terms need `ε_i <= u_i - shift` at evaluated vertices.
    pub shift: i64,
    /// Every vertex needs `u_i >= 1` in the end, costing at least one `ħ`.
    pub need_u: bool,
    pub expand: Option<ExpandRule>,
}

impl Ctx {
    pub fn new(n: usize, hmax: i64, shift: i64, need_u: bool) -> Result<Ctx> {
        if n > MAX_VERTICES || hmax > 200 {
            return Err(Error::CapExceeded(format!("{n} vertices at ħ-degree {hmax}")));
        }
        Ok(Ctx { n, hmax, shift, need_u, expand: None })
    }

    pub fn keep(&self, k: Key) -> bool {
        let h = h_of(k);
        if h > self.hmax {
            return false;
        }
        let rem = self.hmax - h;
        let mut zeros = 0;
        let mut excess = 0;
        for i in 0..self.n {
            let u = u_of(k, i);
            if u == 0 {
                zeros += 1;
            }
            let e = e_of(k, i);
            match self.expand {
                Some(r) if r.vertex == i => {
                    if e > r.base + r.u_weight * u + (r.h_weight * rem) / 2 {
                        return false;
                    }
                }
                _ => excess += (e - u + self.shift).max(0),
            }
        }
        if self.need_u && zeros > rem {
            return false;
        }
        2 * excess <= 3 * rem
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Jet {
    pub terms: HashMap<Key, Scalar>,
}

impl Jet {
    pub fn zero() -> Jet {
        Jet::default()
    }

    pub fn one() -> Jet {
        Jet::constant(one())
    }

    pub fn constant(a: Scalar) -> Jet {
        let mut j = Jet::zero();
        if !a.is_zero() {
            j.terms.insert(key(0, &[]), a);
        }
        j
    }

    pub fn monomial(a: Scalar, k: Key) -> Jet {
        let mut j = Jet::zero();
        if !a.is_zero() {
            j.terms.insert(k, a);
        }
        j
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, k: Key, a: Scalar) {
        if a.is_zero() {
            return;
        }
        let e = self.terms.entry(k).or_insert_with(Scalar::zero);
        *e += a;
        if e.is_zero() {
            self.terms.remove(&k);
        }
    }

    pub fn add_assign(&mut self, o: &Jet) {
        for (k, a) in &o.terms {
            self.add_term(*k, a.clone());
        }
    }

    pub fn add_scaled(&mut self, o: &Jet, s: &Scalar) {
        for (k, a) in &o.terms {
            self.add_term(*k, a * s);
        }
    }

    pub fn scale(&self, s: &Scalar) -> Jet {
        if s.is_zero() {
            return Jet::zero();
        }
        Jet { terms: self.terms.iter().map(|(k, a)| (*k, a * s)).collect() }
    }

    pub fn prune(mut self, ctx: &Ctx) -> Jet {
        self.terms.retain(|k, _| ctx.keep(*k));
        self
    }

    /// `ħ^h Σ_j s_j ε_i^j` times `u_i^u`, for the known coefficients of `s`.
    pub fn from_series(i: usize, s: &Series, h: i64, u: i64, scale: &Scalar, ctx: &Ctx) -> Result<Jet> {
        let mut out = Jet::zero();
        if s.is_zero() && s.is_exact() {
            return Ok(out);
        }
        let mut j = s.val_bound();
        loop {
            let k = key(h, &[(i, u, j)]);
            // keep() is monotone in ε, so larger degrees are dropped as well
            if !ctx.keep(k) {
                break;
            }
            out.add_term(k, s.coeff(j)? * scale);
            j += 1;
        }
        Ok(out)
    }

    pub fn mul(&self, o: &Jet, ctx: &Ctx) -> Jet {
        let off = offsets();
        let (a, b) = if self.len() <= o.len() { (self, o) } else { (o, self) };
        let mut bs: Vec<(&Key, &Scalar)> = b.terms.iter().collect();
        bs.sort_by_key(|(k, _)| h_of(**k));
        let mut out: HashMap<Key, Scalar> = HashMap::new();
        for (ka, va) in &a.terms {
            let ha = h_of(*ka);
            for (kb, vb) in &bs {
                if ha + h_of(**kb) > ctx.hmax {
                    break;
                }
                let k = ka + *kb - off;
                if ctx.keep(k) {
                    let e = out.entry(k).or_insert_with(Scalar::zero);
                    *e += va * *vb;
                }
            }
        }
        out.retain(|_, v| !v.is_zero());
        Jet { terms: out }
    }

    /// `Σ_k a_k X^k` for `X` without constant term; stops when the powers
    /// are truncated away.
    pub fn compose(&self, mut coeff: impl FnMut(usize) -> Scalar, ctx: &Ctx) -> Result<Jet> {
        if self.terms.contains_key(&key(0, &[])) {
            return Err(Error::InvalidSeries("composition needs a jet without constant term".into()));
        }
        let mut out = Jet::constant(coeff(0));
        let mut p = Jet::one();
        for k in 1.. {
            p = p.mul(self, ctx);
            if p.is_zero() {
                break;
            }
            out.add_scaled(&p, &coeff(k));
        }
        Ok(out.prune(ctx))
    }

    pub fn exp(&self, ctx: &Ctx) -> Result<Jet> {
        let mut f = vec![one()];
        self.compose(
            |k| {
                while f.len() <= k {
                    let n = f.len();
                    let next = &f[n - 1] / q(n as i64);
                    f.push(next);
                }
                f[k].clone()
            },
            ctx,
        )
    }

    /// `log(1 + X)`.
    pub fn log1p(&self, ctx: &Ctx) -> Result<Jet> {
        self.compose(
            |k| {
                if k == 0 {
                    Scalar::zero()
                } else if k % 2 == 1 {
                    Scalar::new(1.into(), (k as i64).into())
                } else {
                    Scalar::new((-1).into(), (k as i64).into())
                }
            },
            ctx,
        )
    }

    /// `1/(1 + X)`.
    pub fn recip1p(&self, ctx: &Ctx) -> Result<Jet> {
        self.compose(|k| if k % 2 == 0 { one() } else { q(-1) }, ctx)
    }
}

/// Set partitions of `0..n`, blocks as bit masks.
pub fn set_partitions(n: usize) -> Vec<Vec<u32>> {
    fn go(i: usize, n: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        for b in 0..cur.len() {
            cur[b] |= 1 << i;
            go(i + 1, n, cur, out);
            cur[b] &= !(1 << i);
        }
        cur.push(1 << i);
        go(i + 1, n, cur, out);
        cur.pop();
    }
    let mut out = Vec::new();
    go(0, n, &mut Vec::new(), &mut out);
    out
}

/// `(-1)^{k-1} (k-1)!`.
pub fn cumulant_weight(k: usize) -> Scalar {
    let mut f = one();
    for i in 1..k {
        f *= q(i as i64);
    }
    if k.is_multiple_of(2) {
        -f
    } else {
        f
    }
}
