use std::f64::consts::PI;

use num_complex::Complex64;
use pcyl_core::geometry::{DomainSpec, Interval, Profile};
use pcyl_core::spectral::{
    adaptive_modes, count_zeros, find_eigenvalue, find_eigenvalue_with, locate_resonance_with, phase_derivative_peak,
    scan_eigenvalues, scattering_coefficient, Contour, EigenOptions, ResonanceOptions, SpectralKind,
};
use pcyl_core::transfer::{Direction, StepControl, Transfer};
use pcyl_core::Error;
use proptest::prelude::*;

type C64 = Complex64;

fn rectangle() -> DomainSpec {
    DomainSpec::trapped(Profile::uniform(Interval::new(0.0, 2.0).unwrap()), 0.0, 2.0).unwrap()
}

fn rectangle_roots(n_modes: usize, below: f64) -> Vec<f64> {
    let mut v = Vec::new();
    for k in 1..=n_modes {
        for m in 1..20 {
            let l = (PI * k as f64).powi(2) + (PI * m as f64 / 2.0).powi(2);
            if l < below {
                v.push(l);
            }
        }
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

fn radiating(alpha: f64) -> DomainSpec {
    DomainSpec::radiating(Profile::indented(alpha, 2.0).unwrap(), 0.0, 5.4).unwrap()
}

fn problem_one(alpha: f64) -> DomainSpec {
    DomainSpec::trapped(Profile::indented(alpha, 2.0).unwrap(), 0.0, 2.0).unwrap()
}

#[test]
fn rectangle_eigenvalue_from_seed() {
    for n in 1..=3 {
        let r = find_eigenvalue(&rectangle(), 12.0, n).unwrap();
        let want = PI * PI * 1.25;
        assert!((r.lambda.re - want).abs() < 1e-8);
        assert!((r.omega().re - PI * 5f64.sqrt() / 2.0).abs() < 1e-9);
        assert_eq!(r.kind, SpectralKind::Eigenvalue);
        assert!(r.omega().im.abs() <= 1e-10);
        assert!(r.converged);
    }
}

#[test]
fn rectangle_scan_finds_all_roots_with_multiplicity() {
    let t = Transfer::new(rectangle(), 3, StepControl::default()).unwrap();
    let found = scan_eigenvalues(&t, 5.0, 60.0, 200).unwrap();
    let want = rectangle_roots(3, 60.0);
    let mut expanded = Vec::new();
    for f in &found {
        for _ in 0..f.multiplicity {
            expanded.push(f.lambda);
        }
    }
    assert_eq!(expanded.len(), want.len(), "{found:?}");
    for (g, w) in expanded.iter().zip(&want) {
        assert!((g - w).abs() < 1e-8, "{g} vs {w}");
    }
}

#[test]
fn seed_far_from_any_root_is_reported() {
    let r = find_eigenvalue(&rectangle(), 1.0, 1);
    assert!(matches!(r, Err(Error::NoBracket) | Err(Error::DivergedFromSeed { .. })), "{r:?}");
    assert!(find_eigenvalue(&rectangle(), -3.0, 1).is_err());
}

#[test]
fn iteration_cap_is_enforced() {
    let t = Transfer::new(rectangle(), 2, StepControl::default()).unwrap();
    let opts = EigenOptions { tol: 1e-16, max_iter: 3, ..EigenOptions::default() };
    assert!(matches!(find_eigenvalue_with(&t, 12.0, &opts), Err(Error::NoConvergence(3))));
}

#[test]
fn winding_counts_on_rectangle() {
    let t = Transfer::new(rectangle(), 3, StepControl::default()).unwrap();
    let empty = count_zeros(&Contour::new(C64::new(15.0, 0.0), 0.5).unwrap(), &t).unwrap();
    assert_eq!(empty.count, 0);
    assert!(empty.quality < 0.05);
    let one = count_zeros(&Contour::new(C64::new(1.25 * PI * PI, 0.0), 0.5).unwrap(), &t).unwrap();
    assert_eq!(one.count, 1);
    assert!(one.quality < 0.05);
    assert!((one.root_estimate() - C64::new(1.25 * PI * PI, 0.0)).norm() < 0.5);
    let double = count_zeros(&Contour::new(C64::new(5.0 * PI * PI, 0.0), 0.5).unwrap(), &t).unwrap();
    assert_eq!(double.count, 2);
}

#[test]
fn contour_validation() {
    assert!(Contour::new(C64::new(1.0, 0.0), 1e-6).is_err());
    assert!(Contour::with_samples(C64::new(1.0, 0.0), 0.1, 65).is_err());
    assert!(Contour::with_samples(C64::new(1.0, 0.0), 0.1, 32).is_err());
    assert!(Contour::new(C64::new(1.0, 0.0), 5e-5).unwrap().below_reliable_radius());
    let t = Transfer::new(rectangle(), 2, StepControl::default()).unwrap();
    let through_threshold = Contour::new(C64::new(4.0 * PI * PI - 0.5, 0.0), 0.5).unwrap();
    assert!(matches!(count_zeros(&through_threshold, &t), Err(Error::NearThreshold { .. })));
}

#[test]
fn resonance_disc_around_tabulated_value_holds_one_root() {
    let t = Transfer::new(radiating(0.8), 4, StepControl::with_tolerances(1e-8, 1e-10)).unwrap();
    let w = C64::new(4.4223, 0.0212);
    let c = count_zeros(&Contour::new(w * w, 0.5).unwrap(), &t).unwrap();
    assert_eq!(c.count, 1);
    assert!(c.quality < 0.05);
}

#[test]
fn resonance_coincides_with_trapped_eigenvalue_at_moderate_indentation() {
    let control = StepControl::with_tolerances(1e-8, 1e-10);
    let res_t = Transfer::new(radiating(0.8), 4, control).unwrap();
    let opts = ResonanceOptions { target_radius: 1e-3, ..ResonanceOptions::default() };
    let res = locate_resonance_with(&res_t, C64::new(4.44, 0.0), &opts).unwrap();
    assert!(res.converged);
    assert_eq!(res.kind, SpectralKind::Resonance);
    let eig_t = Transfer::new(problem_one(0.8), 4, control).unwrap();
    let eig = find_eigenvalue_with(&eig_t, 19.75, &EigenOptions::default()).unwrap();
    assert!((res.lambda - eig.lambda).norm() < 1e-3, "{} vs {}", res.lambda, eig.lambda);
    let last = res.contour_history.last().unwrap();
    assert_eq!(last.count, 0);
}

#[test]
fn adaptive_modes_on_uniform_strip_stops_after_one_increment() {
    let mut calls = Vec::new();
    let r = adaptive_modes(
        |n, _| {
            calls.push(n);
            find_eigenvalue(&rectangle(), 12.0, n)
        },
        2,
        1e-8,
    )
    .unwrap();
    assert_eq!(calls, vec![2, 3]);
    assert_eq!(r.n_modes_used, 3);
    assert!(adaptive_modes(|n, _| find_eigenvalue(&rectangle(), 12.0, n), 1, 1e-4).is_err());
}

#[test]
fn adaptive_modes_reports_cap() {
    let r = adaptive_modes(
        |n, _| {
            let mut s = find_eigenvalue(&rectangle(), 12.0, 1)?;
            s.lambda += n as f64;
            Ok(s)
        },
        38,
        1e-8,
    );
    assert!(matches!(r, Err(Error::NoConvergence(_))));
}

#[test]
fn uniform_strip_reflects_with_minus_one() {
    let spec = DomainSpec::radiating(Profile::uniform(Interval::half_line(0.0).unwrap()), 0.0, 3.0).unwrap();
    let t = Transfer::new(spec, 3, StepControl::default()).unwrap();
    for omega in [3.5, 4.4, 5.9] {
        let s = scattering_coefficient(&t, omega).unwrap();
        assert!((s.s1 + C64::new(1.0, 0.0)).norm() < 1e-8, "s1 = {}", s.s1);
        for a in &s.amplitudes_at_x[1..] {
            assert!(a.norm() < 1e-8);
        }
    }
}

#[test]
fn scattering_rejects_bad_setups() {
    let t = Transfer::new(radiating(0.8), 2, StepControl::default()).unwrap();
    assert!(scattering_coefficient(&t, 3.0).is_err());
    let back = t.clone().with_direction(Direction::Backward);
    assert!(scattering_coefficient(&back, 4.0).is_err());
    let trapped = Transfer::new(problem_one(0.8), 2, StepControl::default()).unwrap();
    assert!(scattering_coefficient(&trapped, 4.0).is_err());
}

#[test]
fn phase_derivative_peak_on_uniform_strip_is_flat() {
    let spec = DomainSpec::radiating(Profile::uniform(Interval::half_line(0.0).unwrap()), 0.0, 3.0).unwrap();
    let t = Transfer::new(spec, 2, StepControl::default()).unwrap();
    let (_, d) = phase_derivative_peak(&t, 3.5, 6.0, 11).unwrap();
    assert!(d < 1e-6, "{d}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn reflection_is_unimodular(omega in (PI + 0.1)..(2.0 * PI - 0.1), alpha in 0.3f64..0.85) {
        let t = Transfer::new(radiating(alpha), 4, StepControl::default()).unwrap();
        let s = scattering_coefficient(&t, omega).unwrap();
        prop_assert!((s.s1.norm() - 1.0).abs() < 1e-6, "|s1| = {}", s.s1.norm());
    }

    #[test]
    fn shifted_contours_enclose_nothing(dx in -1.0f64..1.0, dy in -1.0f64..1.0) {
        let t = Transfer::new(rectangle(), 2, StepControl::default()).unwrap();
        let root = C64::new(1.25 * PI * PI, 0.0);
        let r = 0.2;
        let dir = C64::new(dx, dy);
        prop_assume!(dir.norm() > 0.1);
        let shift = dir / dir.norm() * (1.5 * r);
        let w = count_zeros(&Contour::new(root + shift, r).unwrap(), &t).unwrap();
        prop_assert_eq!(w.count, 0);
    }
}
