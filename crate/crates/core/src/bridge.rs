//! Conversion between TR and LogTR families by pairing with the vital
//! corrections `φ_g`.

use num_traits::Zero;

use crate::curve::SpectralCurve;
use crate::differential::{FactorizedDifferential, Mode, PoleForm};
use crate::error::{Error, Result};
use crate::recursion::{log_correction, Family};
use crate::scalar::{factorial, q, Scalar};

/// `φ_g`: the 1-form with poles at vital points by which LogTR `ω(g,1)`
/// differs from its projection onto the ramification points.
pub fn phi(curve: &SpectralCurve, g: u32) -> Result<FactorizedDifferential> {
    let mut f = FactorizedDifferential::new(g, 1, Mode::LogTr);
    for (_, pp) in log_correction(curve, g)? {
        f = f.add(&pp.scale(&q(-1)))?;
    }
    Ok(f.with_tag(g, Mode::LogTr))
}

/// Pairs slot `slot` of `w` with `φ`: `Σ_p res_{t=p} w(t) ∫_p^t φ` over the
/// ramification points `p`.
pub fn star_pair(curve: &SpectralCurve, w: &FactorizedDifferential, slot: usize, phi: &FactorizedDifferential) -> Result<FactorizedDifferential> {
    if slot >= w.n || phi.n != 1 {
        return Err(Error::InvalidArgument("star pairing needs a valid slot and a 1-form".into()));
    }
    let ram = curve.ram_points();
    let mut out = FactorizedDifferential::new(w.g, w.n - 1, w.mode);
    for (key, c) in w.terms() {
        let pf = &key[slot];
        // only poles of order >= 2 at a ramification point contribute
        if pf.d < 2 || !ram.contains(&pf.q) {
            continue;
        }
        let k = pf.d as i64 - 2;
        let mut v = Scalar::zero();
        for (pk, pc) in phi.terms() {
            v += pc * &pk[0].expand(&pf.q, k, k)[0];
        }
        if v.is_zero() {
            continue;
        }
        let mut rest: Vec<PoleForm> = key.clone();
        rest.remove(slot);
        out.add_term(rest, c * &v / q(pf.d as i64 - 1))?;
    }
    Ok(out)
}

/// Compositions `g_1 + ... + g_n = total` with every part at least 1.
fn compositions(total: u32, n: usize) -> Vec<Vec<u32>> {
    if n == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 1..=total {
        for mut rest in compositions(total - first, n - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn convert(family: &Family, curve: &SpectralCurve, g: u32, m: usize, sign: i64, mode: Mode) -> Result<FactorizedDifferential> {
    if m == 0 || 2 * g as i64 - 2 + m as i64 <= 0 {
        return Err(Error::InvalidArgument(format!("({g},{m}) is not stable")));
    }
    let phis: Vec<FactorizedDifferential> = (1..=g).map(|h| phi(curve, h)).collect::<Result<_>>()?;
    let mut total = FactorizedDifferential::new(g, m, mode);
    if m == 1 && g >= 1 {
        total = total.add(&phis[g as usize - 1].scale(&q(sign)))?;
    }
    for n in 0..=g as usize {
        let weight = q(if n % 2 == 1 { sign } else { 1 }) / factorial(n);
        for g0 in 0..=g {
            let rest = g - g0;
            // the (0,2) term pairs to zero: φ has no poles at ramification points
            if 2 * g0 as i64 - 2 + (m + n) as i64 <= 0 {
                continue;
            }
            let parts = compositions(rest, n);
            if parts.is_empty() {
                continue;
            }
            let w = family.get(&(g0, m + n)).ok_or_else(|| Error::MissingInput(format!("input ω({g0},{}) missing", m + n)))?;
            for gs in parts {
                let mut acc = w.clone();
                for gi in gs.iter().rev() {
                    acc = star_pair(curve, &acc, acc.n - 1, &phis[*gi as usize - 1])?;
                }
                total = total.add(&acc.scale(&weight))?;
            }
        }
    }
    Ok(total.with_tag(g, mode))
}

/// LogTR `ω(g,m)` from a TR family containing every `(g', m')` with
/// `g' <= g` and `m' <= m + g - g'`.
pub fn log_from_tr(family: &Family, curve: &SpectralCurve, g: u32, m: usize) -> Result<FactorizedDifferential> {
    convert(family, curve, g, m, 1, Mode::LogTr)
}

/// TR `ω(g,m)` from a LogTR family; the inverse of [`log_from_tr`].
pub fn tr_from_log(family: &Family, curve: &SpectralCurve, g: u32, m: usize) -> Result<FactorizedDifferential> {
    convert(family, curve, g, m, -1, Mode::Tr)
}

/// Converts a whole family, keeping the same `(g, m)` keys.
pub fn convert_family(family: &Family, curve: &SpectralCurve, to: Mode) -> Result<Family> {
    let mut out = Family::new();
    for &(g, m) in family.keys() {
        let f = match to {
            Mode::LogTr => log_from_tr(family, curve, g, m)?,
            Mode::Tr => tr_from_log(family, curve, g, m)?,
            Mode::Dual => return Err(Error::InvalidArgument("bridge converts between tr and logtr".into())),
        };
        out.insert((g, m), f);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::recursion::{check_projection, Engine};

    fn families(c: &SpectralCurve, budget: u32) -> (Family, Family) {
        let e = Engine::new(c.clone());
        (e.family(Mode::Tr, budget).unwrap(), e.family(Mode::LogTr, budget).unwrap())
    }

    #[test]
    fn phi_vanishes_without_vital_points() {
        for c in [fixtures::airy(), fixtures::lambert_log(), fixtures::r_orbifold()] {
            assert!(c.vital.is_empty());
            assert!(phi(&c, 1).unwrap().is_zero());
            assert!(phi(&c, 2).unwrap().is_zero());
        }
    }

    #[test]
    fn phi_is_the_vital_part_of_logtr() {
        let c = fixtures::kappa();
        let e = Engine::new(c.clone());
        for g in 1..=2 {
            let p = phi(&c, g).unwrap();
            assert_eq!(p.pole_points(), vec![q(-1)]);
            let w = e.compute(Mode::LogTr, g, 1).unwrap();
            assert_eq!(w.principal_part(&q(-1)).records(), p.records());
            assert!(check_projection(&w, &c, Mode::LogTr).unwrap().principal_ok);
        }
    }

    #[test]
    fn star_pair_zero_and_bilinear() {
        let c = fixtures::kappa();
        let (tr, _) = families(&c, 2);
        let w = &tr[&(0, 3)];
        let p = phi(&c, 1).unwrap();
        let zero = FactorizedDifferential::new(1, 1, Mode::LogTr);
        assert!(star_pair(&c, w, 2, &zero).unwrap().is_zero());
        let a = star_pair(&c, w, 2, &p).unwrap();
        assert!(!a.is_zero());
        let k = Scalar::new(3.into(), 7.into());
        assert_eq!(star_pair(&c, &w.scale(&k), 2, &p).unwrap(), a.scale(&k));
        assert_eq!(star_pair(&c, w, 2, &p.scale(&k)).unwrap(), a.scale(&k));
    }

    #[test]
    fn star_pair_against_direct_residue() {
        // ω = η_{1,3}(t): res_{t=1} (t-1)^{-3} ∫_1^t φ = φ'(1)/2 for φ = dt/(t+1)^2
        let c = fixtures::kappa();
        let w = FactorizedDifferential::from_terms(0, 1, Mode::Tr, [(vec![PoleForm::new(q(1), 3)], q(1))]).unwrap();
        let p = FactorizedDifferential::from_terms(1, 1, Mode::LogTr, [(vec![PoleForm::new(q(-1), 2)], q(1))]).unwrap();
        let r = star_pair(&c, &w, 0, &p).unwrap();
        // d/dt (t+1)^{-2} at 1 is -2/8
        assert_eq!(r.coeff(&[]), Scalar::new((-1).into(), 8.into()));
    }

    #[test]
    fn log_from_tr_matches_recursion_on_kappa() {
        let c = fixtures::kappa();
        let (tr, log) = families(&c, 4);
        for (&(g, m), want) in &log {
            assert_eq!(&log_from_tr(&tr, &c, g, m).unwrap(), want, "({g},{m})");
            assert_eq!(&tr_from_log(&log, &c, g, m).unwrap(), &tr[&(g, m)], "({g},{m})");
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let dual = |c: SpectralCurve| crate::curve::swap_curve(&c).unwrap();
        for c in [fixtures::kappa(), dual(fixtures::lambert()), dual(fixtures::bms(3).unwrap())] {
            assert!(!c.vital.is_empty());
            let (tr, log) = families(&c, 3);
            let back = convert_family(&convert_family(&tr, &c, Mode::LogTr).unwrap(), &c, Mode::Tr).unwrap();
            assert_eq!(back, tr);
            let back = convert_family(&convert_family(&log, &c, Mode::Tr).unwrap(), &c, Mode::LogTr).unwrap();
            assert_eq!(back, log);
        }
    }

    #[test]
    fn identity_without_vital_points() {
        let c = fixtures::r_orbifold();
        let (tr, _) = families(&c, 3);
        let log = convert_family(&tr, &c, Mode::LogTr).unwrap();
        for (k, v) in &tr {
            assert_eq!(log[k].records(), v.records());
        }
    }

    #[test]
    fn genus_zero_unchanged_and_missing_input() {
        let c = fixtures::kappa();
        let (tr, _) = families(&c, 2);
        assert_eq!(log_from_tr(&tr, &c, 0, 3).unwrap().records(), tr[&(0, 3)].records());
        let mut small = tr.clone();
        small.remove(&(0, 3));
        assert!(matches!(log_from_tr(&small, &c, 1, 2), Err(Error::MissingInput(_))));
        assert!(log_from_tr(&tr, &c, 0, 2).is_err());
    }
}
