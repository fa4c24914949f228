use pcyl_core::geometry::{DomainSpec, Profile};
use pcyl_core::reference_fd::{assemble_fd, richardson, smallest_eigenvalues, Grid};
use pcyl_core::spectral::{adaptive_modes, find_eigenvalue_with, locate_resonance_with, SpectralResult};
use pcyl_core::transfer::Transfer;
use pcyl_core::{Complex64, Error, Result};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::parallel::Parallel;

/// A located eigenvalue or resonance together with the largest orthonormality defect seen
/// over every truncation tried.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeRun {
    pub result: SpectralResult,
    pub max_ortho_defect: f64,
    /// `(N, ω)` for every truncation tried, in order.
    pub trail: Vec<(usize, Complex64)>,
}

impl ModeRun {
    pub fn omega(&self) -> Complex64 {
        self.result.omega()
    }
}

/// Lowest eigenvalue estimate of the Dirichlet problem on `[a, b]` from two coarse
/// finite-difference grids and one Richardson step.
pub fn fd_seed(profile: &Profile, a: f64, b: f64) -> Result<f64> {
    let nx = ((8.0 * (b - a)).ceil() as usize).max(8);
    let coarse = Grid::uniform(a, b, nx, 8)?;
    let fine = coarse.refined();
    let l0 = smallest_eigenvalues(&assemble_fd(profile, &coarse)?, 1)?[0];
    let l1 = smallest_eigenvalues(&assemble_fd(profile, &fine)?, 1)?[0];
    Ok(richardson(l0, l1))
}

/// Runs `task` once for a fixed truncation, or with increasing `N` until `ω` settles.
fn with_modes<F>(config: &RunConfig, mut task: F) -> Result<ModeRun>
where
    F: FnMut(usize, Option<&SpectralResult>) -> Result<SpectralResult>,
{
    let mut defect: f64 = 0.0;
    let mut trail = Vec::new();
    let mut tracked = |n: usize, prev: Option<&SpectralResult>| {
        let r = task(n, prev)?;
        defect = defect.max(r.max_ortho_defect);
        trail.push((n, r.omega()));
        Ok(r)
    };
    let result = match config.modes.n_modes {
        Some(n) => tracked(n, None)?,
        None => adaptive_modes(&mut tracked, config.modes.n_start, config.modes.adaptive_tol)?,
    };
    Ok(ModeRun { result, max_ortho_defect: defect, trail })
}

fn trapped_at(config: &RunConfig, profile: &Profile, a: f64, b: f64, n: usize, seed: f64) -> Result<SpectralResult> {
    let spec = DomainSpec::trapped(profile.clone(), a, b)?;
    let t = Transfer::new(spec, n, config.step_control())?;
    find_eigenvalue_with(&t, seed, &config.eigen_options())
}

/// Lowest-lying Dirichlet eigenvalue on `[a, b]` near `seed_lambda`.
pub fn trapped_mode(config: &RunConfig, profile: &Profile, a: f64, b: f64, seed_lambda: f64) -> Result<ModeRun> {
    with_modes(config, |n, prev| {
        let seed = prev.map(|p| p.lambda.re).unwrap_or(seed_lambda);
        trapped_at(config, profile, a, b, n, seed)
    })
}

/// Resonance of the radiating problem on `(0, X)`. Without an explicit seed, each truncation
/// is seeded with the Dirichlet eigenvalue on `(0, γ)` at the same `N`.
pub fn resonance_mode(config: &RunConfig, profile: &Profile, seed_omega: Option<Complex64>) -> Result<ModeRun> {
    let spec = DomainSpec::radiating(profile.clone(), 0.0, config.domain.truncate_x)?;
    let gamma = config.profile.gamma;
    let mut trapped_seed: Option<f64> = None;
    with_modes(config, |n, prev| {
        let seed = match (seed_omega, prev) {
            (Some(_), Some(p)) => p.omega(),
            (Some(s), None) => s,
            (None, _) => {
                let start = match trapped_seed {
                    Some(l) => l,
                    None => fd_seed(profile, 0.0, gamma)?,
                };
                let eig = trapped_at(config, profile, 0.0, gamma, n, start)?;
                trapped_seed = Some(eig.lambda.re);
                Complex64::new(eig.lambda.re.sqrt(), 0.0)
            }
        };
        let t = Parallel(Transfer::new(spec.clone(), n, config.step_control())?);
        locate_resonance_with(&t, seed, &config.resonance_options())
    })
}

/// `ω₁` on `(0, γ)` and the resonance `ω₂` for one indentation depth.
#[derive(Clone, Debug)]
pub struct AlphaStudy {
    pub alpha: f64,
    pub epsilon: f64,
    pub trapped: Option<Result<ModeRun>>,
    pub resonance: Result<ModeRun>,
}

impl AlphaStudy {
    pub fn converged(&self) -> bool {
        let ok = |r: &Result<ModeRun>| matches!(r, Ok(m) if m.result.converged);
        ok(&self.resonance) && self.trapped.as_ref().is_none_or(ok)
    }

    /// `δ = ω₁ − Re ω₂`.
    pub fn delta(&self) -> Option<f64> {
        match (&self.trapped, &self.resonance) {
            (Some(Ok(t)), Ok(r)) => Some(t.omega().re - r.omega().re),
            _ => None,
        }
    }
}

/// Solves every `α` on the worker pool, returning results in input order.
pub fn alpha_studies(config: &RunConfig, alphas: &[f64], with_trapped: bool) -> Vec<AlphaStudy> {
    let crit = config.alpha_critical();
    let gamma = config.profile.gamma;
    alphas
        .par_iter()
        .map(|&alpha| {
            let profile = Profile::indented(alpha, gamma);
            let trapped = with_trapped.then(|| {
                let p = profile.clone()?;
                let seed = fd_seed(&p, 0.0, gamma)?;
                trapped_mode(config, &p, 0.0, gamma, seed)
            });
            let resonance = profile.and_then(|p| resonance_mode(config, &p, None));
            AlphaStudy { alpha, epsilon: crit - alpha, trapped, resonance }
        })
        .collect()
}

/// Least-squares fit of `log y = p log x + c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerFit {
    pub exponent: f64,
    pub intercept: f64,
    /// Root-mean-square residual in `log y`.
    pub residual: f64,
    pub points: usize,
}

/// Fits `y ~ x^p` through the points with positive coordinates; needs at least two of them.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerFit> {
    let logs: Vec<(f64, f64)> =
        points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    let m = logs.len();
    if m < 2 {
        return Err(Error::InvalidParameter("power-law fit needs two points with positive coordinates"));
    }
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m as f64;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m as f64;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx.is_nan() || sxx <= 0.0 {
        return Err(Error::InvalidParameter("power-law fit needs two distinct abscissae"));
    }
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let ss: f64 = logs.iter().map(|(x, y)| (y - intercept - exponent * x).powi(2)).sum();
    Ok(PowerFit { exponent, intercept, residual: (ss / m as f64).sqrt(), points: m })
}
