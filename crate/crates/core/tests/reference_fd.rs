use std::f64::consts::PI;

use pcyl_core::geometry::{DomainSpec, Interval, Profile};
use pcyl_core::reference_fd::{
    assemble_fd, cusp_grids, cusp_limit_estimate, cusp_truncation, fd_reference, fd_sequence, richardson,
    smallest_eigenvalues, Grid,
};
use pcyl_core::spectral::{adaptive_modes, find_eigenvalue_with, EigenOptions};
use pcyl_core::transfer::{StepControl, Transfer};
use pcyl_core::Error;
use proptest::prelude::*;

fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let panels = 8;
    let h = (b - a) / panels as f64;
    (0..panels).map(|j| quadrature::integrate(&f, a + h * j as f64, a + h * (j + 1) as f64, 1e-13).integral).sum()
}

/// Smooth test function vanishing on the boundary of `[0, 2] × [0, 1]`, with its gradient.
fn test_fn(x: f64, eta: f64) -> (f64, f64, f64) {
    let (sx, cx) = ((PI * x / 2.0).sin(), (PI * x / 2.0).cos());
    let (se, ce) = ((PI * eta).sin(), (PI * eta).cos());
    let w = 1.0 + 0.3 * x * eta;
    (sx * se * w, PI / 2.0 * cx * se * w + sx * se * 0.3 * eta, PI * sx * ce * w + sx * se * 0.3 * x)
}

fn form_errors(profile: &Profile, n: usize) -> (f64, f64) {
    let grid = Grid::uniform(0.0, 2.0, 2 * n, n).unwrap();
    let op = assemble_fd(profile, &grid).unwrap();
    let mut v = vec![0.0; op.n];
    for i in 1..grid.nx() {
        for j in 1..grid.ny() {
            v[op.index(i, j)] = test_fn(grid.x[i], grid.eta[j]).0;
        }
    }
    let energy = integrate(
        |x| {
            let (phi, dphi) = (profile.eval(x), profile.deriv(x));
            integrate(
                |eta| {
                    let (_, vx, ve) = test_fn(x, eta);
                    let s = dphi * eta;
                    phi * vx * vx - 2.0 * s * vx * ve + (1.0 + s * s) / phi * ve * ve
                },
                0.0,
                1.0,
            )
        },
        0.0,
        2.0,
    );
    let mass = integrate(|x| profile.eval(x) * integrate(|eta| test_fn(x, eta).0.powi(2), 0.0, 1.0), 0.0, 2.0);
    ((op.energy(&v) - energy).abs() / energy, (op.mass_norm(&v) - mass).abs() / mass)
}

#[test]
fn quadratic_form_matches_quadrature_at_second_order() {
    let profile = Profile::indented(0.8, 2.0).unwrap();
    let (e1, m1) = form_errors(&profile, 16);
    let (e2, m2) = form_errors(&profile, 32);
    assert!(e1 < 1e-2 && m1 < 1e-2, "{e1} {m1}");
    let (re, rm) = (e1 / e2, m1 / m2);
    assert!((3.2..=4.8).contains(&re), "energy error ratio {re}");
    assert!(rm >= 3.2, "mass error ratio {rm}");
}

#[test]
fn uniform_strip_reduces_to_five_point_laplacian() {
    let profile = Profile::uniform(Interval::new(0.0, 1.0).unwrap());
    let grid = Grid::uniform(0.0, 1.0, 9, 12).unwrap();
    let op = assemble_fd(&profile, &grid).unwrap();
    let (hx, hy) = (1.0 / 9.0, 1.0 / 12.0);
    let v: Vec<f64> = (0..op.n).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
    let kv = op.apply(&v);
    let at = |i: usize, j: usize| if i == 0 || j == 0 || i == 9 || j == 12 { 0.0 } else { v[op.index(i, j)] };
    for i in 1..9 {
        for j in 1..12 {
            let lap = (2.0 * at(i, j) - at(i - 1, j) - at(i + 1, j)) / (hx * hx)
                + (2.0 * at(i, j) - at(i, j - 1) - at(i, j + 1)) / (hy * hy);
            let k = op.index(i, j);
            assert!((kv[k] / op.mass[k] - lap).abs() < 1e-10 * lap.abs().max(1.0));
        }
    }
}

#[test]
fn operator_is_symmetric() {
    let profile = Profile::indented(0.8, 2.0).unwrap();
    let op = assemble_fd(&profile, &Grid::uniform(0.0, 2.0, 16, 8).unwrap()).unwrap();
    for i in 0..op.n {
        for j in 0..op.n {
            assert_eq!(op.get(i, j), op.get(j, i));
        }
    }
    assert!(op.mass.iter().all(|m| *m > 0.0));
}

#[test]
fn grid_invariants() {
    assert!(matches!(Grid::uniform(0.0, 1.0, 7, 8), Err(Error::InvalidGrid(_))));
    assert!(matches!(Grid::uniform(0.0, 1.0, 8, 7), Err(Error::InvalidGrid(_))));
    let g = Grid::uniform(0.0, 1.0, 8, 8).unwrap();
    assert_eq!((g.nx() - 1) * (g.ny() - 1), 49);
    let r = g.refined();
    assert_eq!((r.nx(), r.ny()), (16, 16));
    assert!(Grid::new(vec![0.0; 9], (0..=8).map(|j| j as f64 / 8.0).collect()).is_err());
}

#[test]
fn unit_square_extrapolates_to_two_pi_squared() {
    let profile = Profile::uniform(Interval::new(0.0, 1.0).unwrap());
    let e = fd_reference(&profile, 0.0, 1.0, 16, 16, 3).unwrap();
    assert!((e.richardson - 2.0 * PI * PI).abs() < 1e-4 * 2.0 * PI * PI, "{}", e.richardson);
    for w in e.levels.windows(2) {
        assert!(w[0].lambda < w[1].lambda && w[1].lambda < 2.0 * PI * PI);
    }
}

#[test]
fn rectangle_lowest_eigenvalue() {
    let profile = Profile::uniform(Interval::new(0.0, 2.0).unwrap());
    let e = fd_reference(&profile, 0.0, 2.0, 16, 8, 3).unwrap();
    assert!((e.richardson - 1.25 * PI * PI).abs() < 1e-4 * 1.25 * PI * PI, "{}", e.richardson);
    let op = assemble_fd(&profile, &Grid::uniform(0.0, 2.0, 16, 8).unwrap()).unwrap();
    let two = smallest_eigenvalues(&op, 3).unwrap();
    assert!(two[0] < two[1] && two[1] <= two[2]);
}

#[test]
fn indented_sequence_converges_at_second_order() {
    let profile = Profile::indented(0.8, 2.0).unwrap();
    let e = fd_reference(&profile, 0.0, 2.0, 20, 10, 3).unwrap();
    let l: Vec<f64> = e.levels.iter().map(|v| v.lambda).collect();
    let ratio = (l[1] - l[0]) / (l[2] - l[1]);
    assert!((ratio - 4.0).abs() <= 0.8, "ratio {ratio}");
    assert_eq!(e.richardson, richardson(l[1], l[2]));
    assert!(fd_sequence(&profile, &[Grid::uniform(0.0, 2.0, 8, 8).unwrap()]).is_err());
}

#[test]
fn finite_differences_agree_with_coupled_modes() {
    for alpha in [0.7, 0.8, 0.9] {
        let profile = Profile::indented(alpha, 2.0).unwrap();
        let fd = fd_reference(&profile, 0.0, 2.0, 40, 20, 3).unwrap();
        let spec = DomainSpec::trapped(profile, 0.0, 2.0).unwrap();
        let cm = adaptive_modes(
            |n, prev| {
                let seed = prev.map(|p| p.lambda.re).unwrap_or(fd.richardson);
                let t = Transfer::new(spec.clone(), n, StepControl::default())?;
                find_eigenvalue_with(&t, seed, &EigenOptions::default())
            },
            2,
            1e-4,
        )
        .unwrap();
        let diff = (cm.omega().re - fd.omega()).abs();
        assert!(diff < 1e-3, "alpha {alpha}: {} vs {}", cm.omega().re, fd.omega());
    }
}

#[test]
fn cusp_estimate_is_grid_consistent() {
    let xt = cusp_truncation(2.0, 0.01).unwrap();
    let coarse = cusp_limit_estimate(2.0, &cusp_grids(xt, 32, 3).unwrap()).unwrap();
    let fine = cusp_limit_estimate(2.0, &cusp_grids(xt, 48, 3).unwrap()).unwrap();
    let bar = 2.0 * coarse.error_estimate.max(fine.error_estimate);
    assert!((coarse.richardson - fine.richardson).abs() <= bar.max(1e-6), "{coarse:?} {fine:?}");
    assert!((fine.omega() - 4.6252).abs() < 5e-3, "{}", fine.omega());
    let grids = cusp_grids(xt, 16, 2).unwrap();
    let g = &grids[0];
    let widths: Vec<f64> = g.x.windows(2).map(|w| w[1] - w[0]).collect();
    assert!((widths[15] / widths[14] - 0.8).abs() < 1e-12);
    assert!((widths[1] / widths[0] - 1.0).abs() < 1e-12);
    assert!(cusp_limit_estimate(2.0, &[]).is_err());
}

#[test]
fn cusp_bounds_trapped_eigenvalues_from_above() {
    let xt = cusp_truncation(2.0, 0.01).unwrap();
    let cusp = cusp_limit_estimate(2.0, &cusp_grids(xt, 32, 3).unwrap()).unwrap().omega();
    for alpha in [0.9, 0.97] {
        let fd = fd_reference(&Profile::indented(alpha, 2.0).unwrap(), 0.0, 2.0, 32, 16, 3).unwrap();
        assert!(fd.omega() < cusp, "alpha {alpha}: {} vs {cusp}", fd.omega());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn eigenvalues_are_positive_and_ordered(alpha in 0.0f64..0.95, nx in 8usize..20, ny in 8usize..14) {
        let profile = Profile::indented(alpha, 2.0).unwrap();
        let op = assemble_fd(&profile, &Grid::uniform(0.0, 2.0, nx, ny).unwrap()).unwrap();
        let l = smallest_eigenvalues(&op, 2).unwrap();
        prop_assert!(l[0] > 0.0 && l[0] <= l[1]);
        prop_assert!(l[0] > PI * PI * 0.9);
    }
}
