//! Named sample curves used by tests, the CLI and the bindings.

use crate::curve::{build_curve, LogRationalFunction, Mobius, SpectralCurve};
use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::ratfunc::RationalFunction;
use crate::scalar::{q, qr, Scalar};

fn poly(c: &[Scalar]) -> RationalFunction {
    RationalFunction::from_poly(Poly::new(c.to_vec()))
}

fn lrf(rational: RationalFunction, logs: Vec<(Scalar, Scalar)>) -> LogRationalFunction {
    LogRationalFunction::new(rational, logs)
}

/// `x = z^2`, `y = z`.
pub fn airy() -> SpectralCurve {
    build_curve(lrf(poly(&[q(0), q(0), q(1)]), vec![]), LogRationalFunction::z()).unwrap()
}

/// `x = z - log z`, `y = z`.
pub fn lambert() -> SpectralCurve {
    build_curve(lrf(poly(&[q(0), q(1)]), vec![(q(0), q(-1))]), LogRationalFunction::z()).unwrap()
}

/// `x = z - log z`, `y = log z`.
pub fn lambert_log() -> SpectralCurve {
    build_curve(lrf(poly(&[q(0), q(1)]), vec![(q(0), q(-1))]), LogRationalFunction::log(q(0), q(1))).unwrap()
}

/// `x = z^2/2 - log z`, `y = z`.
pub fn r_spin() -> SpectralCurve {
    build_curve(lrf(poly(&[q(0), q(0), qr(1, 2)]), vec![(q(0), q(-1))]), LogRationalFunction::z()).unwrap()
}

/// `x = z^2/2 - log z`, `y = log z`.
pub fn r_orbifold() -> SpectralCurve {
    build_curve(lrf(poly(&[q(0), q(0), qr(1, 2)]), vec![(q(0), q(-1))]), LogRationalFunction::log(q(0), q(1))).unwrap()
}

/// Triple Hodge curve with `(α, β, γ) = (1, 2, 3)`:
/// `x = log((1+2z)/(1+z)) - (1/2) log((1+3z)/(1+z))`,
/// `y = log((1+2z)/(1+z))`.
pub fn triple_hodge() -> SpectralCurve {
    let x = lrf(RationalFunction::zero(), vec![(qr(-1, 2), q(1)), (q(-1), qr(-1, 2)), (qr(-1, 3), qr(-1, 2))]);
    let y = lrf(RationalFunction::zero(), vec![(qr(-1, 2), q(1)), (q(-1), q(-1))]);
    build_curve(x, y).unwrap()
}

/// The triple Hodge curve in the chart `ζ = (1+2z)/(1+z)`:
/// `x = log ζ - (1/2) log(ζ - 1/2)`, `y = log ζ`.
pub fn triple_hodge_zeta() -> SpectralCurve {
    let x = lrf(RationalFunction::zero(), vec![(q(0), q(1)), (qr(1, 2), qr(-1, 2))]);
    build_curve(x, LogRationalFunction::log(q(0), q(1))).unwrap()
}

/// `x = z - log z`, `y = log(z + 1)`.
pub fn kappa() -> SpectralCurve {
    build_curve(lrf(poly(&[q(0), q(1)]), vec![(q(0), q(-1))]), LogRationalFunction::log(q(-1), q(1))).unwrap()
}

/// The same curve in the chart `ζ = z + 1`, where `y = log ζ`.
pub fn kappa_zeta() -> SpectralCurve {
    kappa().mobius(&Mobius::new(q(1), q(-1), q(0), q(1)).unwrap()).unwrap()
}

/// `x = m log(1+z) - log z`, `y = z`.
pub fn bms(m: i64) -> Result<SpectralCurve> {
    if m < 2 {
        return Err(Error::InvalidArgument("m must be at least 2".into()));
    }
    build_curve(lrf(RationalFunction::zero(), vec![(q(-1), q(m)), (q(0), q(-1))]), LogRationalFunction::z())
}

/// `x = z + log(1+2z) - log z`, `y = z + log(1+2z)`.
pub fn family2() -> SpectralCurve {
    let y = lrf(poly(&[q(0), q(1)]), vec![(qr(-1, 2), q(1))]);
    let x = lrf(poly(&[q(0), q(1)]), vec![(qr(-1, 2), q(1)), (q(0), q(-1))]);
    build_curve(x, y).unwrap()
}

/// The same pair with `y` replaced by `y - x = log z`.
pub fn family2_log() -> SpectralCurve {
    let x = family2().x;
    build_curve(x, LogRationalFunction::log(q(0), q(1))).unwrap()
}

/// `x = log z + log(z+2) + 3z/4`, `y = z`.
pub fn hock() -> SpectralCurve {
    build_curve(lrf(poly(&[q(0), qr(3, 4)]), vec![(q(0), q(1)), (q(-2), q(1))]), LogRationalFunction::z()).unwrap()
}

/// Looks a fixture up by name.
pub fn by_name(name: &str) -> Result<SpectralCurve> {
    Ok(match name {
        "airy" => airy(),
        "lambert" => lambert(),
        "lambert-log" => lambert_log(),
        "r-spin" => r_spin(),
        "r-orbifold" => r_orbifold(),
        "triple-hodge" => triple_hodge(),
        "triple-hodge-zeta" => triple_hodge_zeta(),
        "kappa" => kappa(),
        "kappa-zeta" => kappa_zeta(),
        "bms3" => bms(3)?,
        "family2" => family2(),
        "family2-log" => family2_log(),
        "hock" => hock(),
        _ => return Err(Error::InvalidArgument(format!("unknown fixture {name}"))),
    })
}

pub const NAMES: &[&str] = &[
    "airy",
    "lambert",
    "lambert-log",
    "r-spin",
    "r-orbifold",
    "triple-hodge",
    "triple-hodge-zeta",
    "kappa",
    "kappa-zeta",
    "bms3",
    "family2",
    "family2-log",
    "hock",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_build() {
        for n in NAMES {
            by_name(n).unwrap();
        }
        assert!(by_name("nope").is_err());
    }

    #[test]
    fn special_points() {
        assert_eq!(r_spin().ram_points(), vec![q(-1), q(1)]);
        assert_eq!(r_spin().vital_points(), Vec::<Scalar>::new());
        assert!(r_orbifold().vital.is_empty());
        assert_eq!(triple_hodge().ram_points(), vec![q(0)]);
        assert!(triple_hodge().vital.is_empty());
        assert_eq!(triple_hodge_zeta().ram_points(), vec![q(1)]);
        assert_eq!(kappa().vital_points(), vec![q(-1)]);
        assert_eq!(kappa_zeta().vital_points(), vec![q(0)]);
        assert_eq!(kappa_zeta().ram_points(), vec![q(2)]);
        assert_eq!(family2().ram_points(), vec![q(-1), qr(1, 2)]);
        assert!(family2().vital.is_empty());
        assert_eq!(hock().ram_points(), vec![q(-4), qr(-2, 3)]);
        assert_eq!(bms(3).unwrap().ram_points(), vec![qr(1, 2)]);
    }

    #[test]
    fn dual_vital_points() {
        use crate::curve::swap_curve;
        // only the pole of dx at -1/3 is vital for the dual
        assert_eq!(swap_curve(&triple_hodge()).unwrap().vital_points(), vec![qr(-1, 3)]);
        assert_eq!(swap_curve(&r_spin()).unwrap().vital_points(), vec![q(0)]);
        assert!(swap_curve(&r_orbifold()).unwrap().vital.is_empty());
    }
}
