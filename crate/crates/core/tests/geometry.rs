use std::sync::Arc;

use pcyl_core::geometry::{
    alpha_critical, bump_sum, DomainKind, DomainSpec, EndCondition, IndentedWaveguide, Interval, Profile,
};
use pcyl_core::Error;
use proptest::prelude::*;

/// `1 / max bump_sum` by golden-section search on a coarse bracket followed by bisection
/// in `α` on the sign of `min φ` over a dense grid around the maximum.
fn alpha_critical_oracle(gamma: f64) -> f64 {
    let f = |x: f64| bump_sum(x, gamma);
    let (mut lo, mut hi) = (0.0, gamma + 3.0);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    while hi - lo > 1e-7 {
        let a = hi - r * (hi - lo);
        let b = lo + r * (hi - lo);
        if f(a) < f(b) {
            lo = a;
        } else {
            hi = b;
        }
    }
    let centre = 0.5 * (lo + hi);
    let xs: Vec<f64> = (0..=20_000).map(|i| centre - 1e-5 + 2e-5 * i as f64 / 20_000.0).collect();
    let (mut a_lo, mut a_hi) = (0.5, 1.5);
    for _ in 0..100 {
        let a = 0.5 * (a_lo + a_hi);
        if xs.iter().all(|x| 1.0 - a * f(*x) > 0.0) {
            a_lo = a;
        } else {
            a_hi = a;
        }
    }
    0.5 * (a_lo + a_hi)
}

#[test]
fn critical_alpha_matches_minimization_oracle() {
    for gamma in [0.5, 1.0, 2.0, 3.0, 10.0] {
        let got = alpha_critical(gamma);
        let want = alpha_critical_oracle(gamma);
        assert!((got - want).abs() < 1e-10, "gamma {gamma}: {got} vs {want}");
    }
    assert!(alpha_critical(2.0) < 1.0);
    assert!((alpha_critical(2.0) - 1.0).abs() < 1e-6);
}

#[test]
fn critical_alpha_ordering_against_oracle() {
    let (a2, a10) = (alpha_critical(2.0), alpha_critical(10.0));
    let (o2, o10) = (alpha_critical_oracle(2.0), alpha_critical_oracle(10.0));
    assert_eq!(a2 <= a10 + 1e-6, o2 <= o10 + 1e-6);
}

#[test]
fn indented_profile_examples() {
    let w = IndentedWaveguide::new(0.8, 2.0).unwrap();
    let e4 = (-4.0f64).exp();
    assert!((w.width(0.0) - (1.0 - 1.6 * e4)).abs() < 1e-15);
    assert!(w.slope(0.0) == 0.0);
    assert!(w.width(2.0) > 0.19 && w.width(2.0) < 0.21);
    assert!(matches!(IndentedWaveguide::new(1.0, 2.0), Err(Error::AlphaTooLarge { .. })));
    assert!(IndentedWaveguide::new(-0.1, 2.0).is_err());
    assert!(IndentedWaveguide::new(0.5, 0.0).is_err());
    let eps = IndentedWaveguide::new(0.97, 2.0).unwrap().epsilon();
    assert!((eps - (alpha_critical(2.0) - 0.97)).abs() < 1e-15);
}

#[test]
fn tail_validation_examples() {
    let p = Profile::indented(0.97, 2.0).unwrap();
    assert!(p.validate_tail(5.4, 1e-4).is_ok());
    assert!(p.validate_tail(0.0, f64::INFINITY).is_ok());
    let q = Profile::indented(0.8, 2.0).unwrap();
    assert!(matches!(q.validate_tail(3.0, 1e-4), Err(Error::TailNotFlat { .. })));
    let start = q.flat_tail_start().unwrap();
    assert!(q.validate_tail(start, 1e-4).is_ok());
    assert!(q.validate_tail(start - 0.05, 1e-4).is_err());
}

#[test]
fn domain_validation() {
    let p = Profile::indented(0.8, 2.0).unwrap();
    assert!(DomainSpec::radiating(p.clone(), 0.0, 5.4).is_ok());
    assert!(matches!(DomainSpec::radiating(p.clone(), 0.0, 3.0), Err(Error::TailNotFlat { .. })));
    assert!(DomainSpec::new(
        p.clone(),
        DomainKind::Compact { a: 0.0, b: 6.0 },
        EndCondition::Dirichlet,
        EndCondition::Radiation
    )
    .is_err());
    assert!(DomainSpec::new(
        p.clone(),
        DomainKind::HalfLineTruncated { a: 0.0, x_trunc: 6.0 },
        EndCondition::Radiation,
        EndCondition::Dirichlet
    )
    .is_err());
    assert!(DomainSpec::trapped(p.clone(), 1.0, 1.0).is_err());
    assert!(DomainSpec::new(
        p.clone(),
        DomainKind::Compact { a: 0.0, b: 1.5 },
        EndCondition::Neumann,
        EndCondition::Dirichlet
    )
    .is_ok());
    assert!(matches!(
        DomainSpec::new(p, DomainKind::Compact { a: 0.0, b: 1.5 }, EndCondition::Dirichlet, EndCondition::Neumann),
        Err(Error::TailNotFlat { .. })
    ));
}

#[test]
fn custom_profiles() {
    let iv = Interval::new(0.0, 2.0).unwrap();
    let dip = Profile::custom(Arc::new(|x: f64| 1.0 - 0.5 * (-(x - 1.0).powi(2)).exp()), None, iv, None).unwrap();
    let exact = |x: f64| (x - 1.0) * (-(x - 1.0).powi(2)).exp();
    for i in 0..=20 {
        let x = 0.1 * i as f64;
        assert!((dip.deriv(x) - exact(x)).abs() < 1e-9);
    }
    let bad = Profile::custom(Arc::new(|x: f64| (x - 1.0).abs() - 1e-9), None, iv, None);
    assert!(matches!(bad, Err(Error::NonPositiveWidth { .. })));
    assert!(Interval::new(1.0, 0.0).is_err());
}

#[test]
fn pinched_profile_touches_zero_at_the_peak() {
    let p = Profile::pinched(2.0, 1.99).unwrap();
    assert!(p.eval(1.99) > 0.0 && p.eval(1.99) < 1e-3);
    assert!(Profile::pinched(2.0, 2.5).is_err());
    assert!(Profile::pinched(2.0, 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn indented_profile_is_even(frac in 0.0f64..0.999, gamma in 0.2f64..6.0, x in 0.0f64..10.0) {
        let w = IndentedWaveguide::new(frac * alpha_critical(gamma), gamma).unwrap();
        prop_assert_eq!(w.width(x), w.width(-x));
        prop_assert_eq!(w.slope(x), -w.slope(-x));
    }

    #[test]
    fn derivative_matches_central_difference(frac in 0.0f64..0.99, gamma in 0.2f64..6.0) {
        let p = Profile::indented(frac * alpha_critical(gamma), gamma).unwrap();
        let h = 1e-5;
        for i in 0..50 {
            let x = 0.2 * i as f64;
            let fd = (p.eval(x + h) - p.eval(x - h)) / (2.0 * h);
            prop_assert!((p.deriv(x) - fd).abs() <= 1e-8);
        }
    }

    #[test]
    fn indented_profile_is_positive_below_critical(frac in 0.0f64..0.999, gamma in 0.2f64..6.0) {
        let alpha = frac * alpha_critical(gamma);
        let p = Profile::indented(alpha, gamma).unwrap();
        prop_assert!(p.check_positive(0.0, gamma + 5.0).is_ok());
        prop_assert!(p.flat_tail_start().unwrap() >= gamma);
    }
}
