use std::sync::OnceLock;

use logtr_core::hurwitz::{hurwitz_count, HurwitzQuery};
use logtr_core::scalar::{factorial, fmt_scalar, parse_scalar, pow, q};
use logtr_core::{fixtures, FactorizedDifferential, Mobius, Mode, Poly, RationalFunction, Scalar, Series, SpectralCurve};
use logtr_core::recursion::Engine;
use proptest::prelude::*;

fn small() -> impl Strategy<Value = Scalar> {
    (-6i64..=6, 1i64..=4).prop_map(|(n, d)| Scalar::new(n.into(), d.into()))
}

fn poly_series(c: &[Scalar], start: usize) -> Series {
    let mut v = vec![q(0); start];
    v.extend_from_slice(c);
    Series::exact(0, v)
}

fn kappa_04() -> &'static FactorizedDifferential {
    static W: OnceLock<FactorizedDifferential> = OnceLock::new();
    W.get_or_init(|| Engine::new(fixtures::kappa()).compute(Mode::LogTr, 0, 4).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scalar_text_round_trip(n in any::<i64>(), d in 1i64..1_000_000) {
        let x = Scalar::new(n.into(), d.into());
        let s = fmt_scalar(&x);
        prop_assert_eq!(parse_scalar(&s).unwrap(), x);
        prop_assert!(!s.contains('.'));
    }

    #[test]
    fn exp_and_log_are_inverse(c in prop::collection::vec(small(), 1..5)) {
        let n = 8;
        let f = poly_series(&c, 1);
        let back = f.exp(n).unwrap().log(n).unwrap();
        for k in 0..n {
            prop_assert_eq!(back.coeff(k).unwrap(), f.coeff(k).unwrap());
        }
    }

    #[test]
    fn reversion_is_an_involution(c in prop::collection::vec(small(), 0..4)) {
        let n = 8;
        let mut v = vec![q(1)];
        v.extend(c);
        let f = poly_series(&v, 1);
        let back = f.reversion(n).unwrap().reversion(n).unwrap();
        for k in 0..n {
            prop_assert_eq!(back.coeff(k).unwrap(), f.coeff(k).unwrap());
        }
        // and composes to the identity
        let id = f.compose(&f.reversion(n).unwrap(), n).unwrap();
        for k in 0..n {
            prop_assert_eq!(id.coeff(k).unwrap(), if k == 1 { q(1) } else { q(0) });
        }
    }

    #[test]
    fn series_division_undoes_multiplication(a in prop::collection::vec(small(), 1..5), b in prop::collection::vec(small(), 1..5)) {
        prop_assume!(b[0] != q(0));
        let n = 8;
        let (fa, fb) = (poly_series(&a, 0), poly_series(&b, 0));
        let back = (&fa * &fb).div(&fb, n).unwrap();
        for k in 0..n {
            prop_assert_eq!(back.coeff(k).unwrap(), fa.coeff(k).unwrap());
        }
    }

    #[test]
    fn partial_fractions_reconstruct(
        roots in prop::collection::btree_map(-3i64..=3, 1usize..=2, 1..4),
        num in prop::collection::vec(small(), 1..6),
        z in small(),
    ) {
        let mut den = Poly::one();
        for (&a, &m) in &roots {
            den = &den * &Poly::linear(&q(a)).pow(m);
        }
        let f = RationalFunction::new(Poly::new(num), den).unwrap();
        prop_assume!(f.eval(&z).is_ok());
        let (p, terms) = f.apart().unwrap();
        let mut sum = p.eval(&z);
        for (a, d, c) in terms {
            sum += c / pow(&(&z - &a), d as i64);
        }
        prop_assert_eq!(sum, f.eval(&z).unwrap());
    }

    #[test]
    fn genus_zero_hurwitz_formula(mu in prop::collection::vec(1usize..=3, 1..=3)) {
        // H = b!/|Aut μ| · d^{ℓ-3} · Π μ_i^{μ_i}/μ_i!, b = d + ℓ - 2
        let d: usize = mu.iter().sum();
        prop_assume!(d <= logtr_core::hurwitz::MAX_DEGREE);
        let l = mu.len();
        let mut want = factorial(d + l - 2) * pow(&q(d as i64), l as i64 - 3);
        for &m in &mu {
            want *= pow(&q(m as i64), m as i64) / factorial(m);
        }
        for k in 1..=3 {
            let c = mu.iter().filter(|&&m| m == k).count();
            want /= factorial(c);
        }
        prop_assert_eq!(hurwitz_count(&HurwitzQuery::new(0, mu).unwrap()).unwrap(), want);
    }

    #[test]
    fn correlators_are_symmetric(pts in prop::collection::btree_set(4i64..40, 4), perm in Just(()).prop_perturb(|_, mut r| {
        let mut p = vec![0usize, 1, 2, 3];
        for i in (1..4).rev() {
            p.swap(i, (r.next_u32() as usize) % (i + 1));
        }
        p
    })) {
        let z: Vec<Scalar> = pts.iter().map(|&k| Scalar::new(k.into(), 3.into())).collect();
        let zp: Vec<Scalar> = perm.iter().map(|&i| z[i].clone()).collect();
        let w = kappa_04();
        prop_assert_eq!(w.evaluate(&z).unwrap(), w.evaluate(&zp).unwrap());
    }
}

fn chart_case(c: &SpectralCurve, mode: Mode, a: i64, b: i64, cc: i64, d: i64) -> Result<(), TestCaseError> {
    let m = Mobius::new(q(a), q(b), q(cc), q(d)).map_err(|_| TestCaseError::reject("degenerate"))?;
    let Ok(cm) = c.mobius(&m) else {
        return Err(TestCaseError::reject("special point at infinity"));
    };
    let (e, em) = (Engine::new(c.clone()), Engine::new(cm));
    let jac = |zeta: &Scalar| q(a * d - b * cc) / pow(&(zeta * q(cc) + q(d)), 2);
    let zmap = |zeta: &Scalar| (zeta * q(a) + q(b)) / (zeta * q(cc) + q(d));
    for (g, n) in [(0u32, 3usize), (1, 1), (1, 2)] {
        let zeta: Vec<Scalar> = (0..n).map(|i| Scalar::new((7 + 4 * i as i64).into(), 5.into())).collect();
        if zeta.iter().any(|s| (s * q(cc) + q(d)) == q(0)) {
            return Err(TestCaseError::reject("sample at infinity"));
        }
        let z: Vec<Scalar> = zeta.iter().map(zmap).collect();
        let Ok(direct) = e.compute(mode, g, n).unwrap().evaluate(&z) else {
            return Err(TestCaseError::reject("sample at a pole"));
        };
        let mut want = direct;
        for s in &zeta {
            want *= jac(s);
        }
        prop_assert_eq!(em.compute(mode, g, n).unwrap().evaluate(&zeta).unwrap(), want, "({},{})", g, n);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn correlators_transform_as_differentials(a in -2i64..=2, b in -2i64..=2, c in -1i64..=1, d in -2i64..=2) {
        chart_case(&fixtures::lambert(), Mode::Tr, a, b, c, d)?;
        chart_case(&fixtures::kappa(), Mode::LogTr, a, b, c, d)?;
    }
}
