use pcyl_core::geometry::{DomainSpec, Interval, Profile};
use pcyl_core::reference_fd::{cusp_grids, cusp_limit_estimate, cusp_truncation, fd_reference, richardson, FdEstimate};
use pcyl_core::spectral::{phase_derivative_peak, scattering_coefficient, SpectralResult};
use pcyl_core::transfer::Transfer;
use pcyl_core::{Complex64, Result};

use crate::artifact::{format_float, Artifact, Cell, RowStatus};
use crate::config::{ConfigError, Family, Problem, RunConfig, TABLE1_ALPHAS, TABLE2_EPSILONS};
use crate::solve::{alpha_studies, fd_seed, fit_power_law, resonance_mode, trapped_mode, AlphaStudy, ModeRun};

/// Validates the configuration and runs its problem.
pub fn run(config: &RunConfig) -> std::result::Result<Artifact, ConfigError> {
    config.validate()?;
    Ok(match config.problem.expect("validated") {
        Problem::Eig => cmd_eig(config)?,
        Problem::Res => cmd_res(config)?,
        Problem::Scatter => cmd_scatter(config)?,
        Problem::RefFd => cmd_ref_fd(config)?,
        Problem::Table1 => cmd_table1(config),
        Problem::Table2 => cmd_table2(config),
        Problem::Sweep => cmd_sweep(config),
    })
}

fn status_of(r: &Result<ModeRun>) -> (RowStatus, String) {
    match r {
        Ok(m) if m.result.converged => (RowStatus::Ok, String::new()),
        Ok(_) => (RowStatus::Unconverged, "final contour checks failed".to_string()),
        Err(e) => (RowStatus::Failed, e.to_string()),
    }
}

fn combine(a: (RowStatus, String), b: (RowStatus, String)) -> (RowStatus, String) {
    let status = if a.0 == RowStatus::Failed || b.0 == RowStatus::Failed {
        RowStatus::Failed
    } else if a.0 == RowStatus::Ok {
        b.0
    } else {
        a.0
    };
    let msg: Vec<String> = [a.1, b.1].into_iter().filter(|m| !m.is_empty()).collect();
    (status, msg.join("; "))
}

fn field<T>(r: &Result<ModeRun>, f: impl Fn(&SpectralResult) -> T) -> Option<T> {
    r.as_ref().ok().map(|m| f(&m.result))
}

fn seed_omega(config: &RunConfig) -> Option<Complex64> {
    config.search.seed_omega.map(|re| Complex64::new(re, config.search.seed_omega_im.unwrap_or(0.0)))
}

fn alpha_cell(config: &RunConfig) -> Cell {
    match config.profile.family {
        Family::Indented => Cell::opt(config.profile.alpha),
        _ => Cell::Empty,
    }
}

pub fn cmd_eig(config: &RunConfig) -> std::result::Result<Artifact, ConfigError> {
    let profile = config.profile()?;
    let [a, b] = config.interval();
    let mut art = Artifact::new(
        config,
        "eig",
        &[
            "alpha",
            "a",
            "b",
            "lambda",
            "omega",
            "n_modes_used",
            "residual",
            "uncertainty",
            "max_ortho_defect",
            "evaluations",
            "status",
            "message",
        ],
    );
    let run = match config.search.seed_omega {
        Some(w) => Ok(w * w),
        None => fd_seed(&profile, a, b),
    }
    .and_then(|seed| trapped_mode(config, &profile, a, b, seed));
    let (status, msg) = status_of(&run);
    art.push(
        status,
        vec![
            alpha_cell(config),
            a.into(),
            b.into(),
            Cell::opt(field(&run, |r| r.lambda.re)),
            Cell::opt(field(&run, |r| r.omega().re)),
            Cell::count(field(&run, |r| r.n_modes_used)),
            Cell::opt(field(&run, |r| r.residual)),
            Cell::opt(field(&run, |r| r.uncertainty)),
            Cell::opt(run.as_ref().ok().map(|m| m.max_ortho_defect)),
            Cell::count(field(&run, |r| r.evaluations)),
            status.label().into(),
            Cell::Text(msg),
        ],
    );
    Ok(art)
}

pub fn cmd_res(config: &RunConfig) -> std::result::Result<Artifact, ConfigError> {
    let profile = config.profile()?;
    let seed = seed_omega(config);
    if seed.is_none() && config.profile.family != Family::Indented {
        return Err(ConfigError("res needs search.seed_omega for profiles without a trapped mode".into()));
    }
    let mut art = Artifact::new(
        config,
        "res",
        &[
            "alpha",
            "truncate_x",
            "re_omega",
            "im_omega",
            "re_lambda",
            "im_lambda",
            "n_modes_used",
            "residual",
            "radius",
            "contours",
            "max_ortho_defect",
            "status",
            "message",
        ],
    );
    let run = resonance_mode(config, &profile, seed);
    let (status, msg) = status_of(&run);
    art.push(
        status,
        vec![
            alpha_cell(config),
            config.domain.truncate_x.into(),
            Cell::opt(field(&run, |r| r.omega().re)),
            Cell::opt(field(&run, |r| r.omega().im)),
            Cell::opt(field(&run, |r| r.lambda.re)),
            Cell::opt(field(&run, |r| r.lambda.im)),
            Cell::count(field(&run, |r| r.n_modes_used)),
            Cell::opt(field(&run, |r| r.residual)),
            Cell::opt(field(&run, |r| r.uncertainty)),
            Cell::count(field(&run, |r| r.contour_history.len())),
            Cell::opt(run.as_ref().ok().map(|m| m.max_ortho_defect)),
            status.label().into(),
            Cell::Text(msg),
        ],
    );
    Ok(art)
}

/// Reflection coefficient at one frequency, increasing `N` until `s₁` settles when adaptive.
fn scatter_point(config: &RunConfig, spec: &DomainSpec, omega: f64) -> Result<(Complex64, usize)> {
    let at = |n: usize| -> Result<Complex64> {
        let t = Transfer::new(spec.clone(), n, config.step_control())?;
        Ok(scattering_coefficient(&t, omega)?.s1)
    };
    if let Some(n) = config.modes.n_modes {
        return Ok((at(n)?, n));
    }
    let mut prev = at(config.modes.n_start)?;
    for n in config.modes.n_start + 1..=pcyl_core::spectral::MAX_ADAPTIVE_MODES {
        let cur = at(n)?;
        if (cur - prev).norm() <= config.modes.adaptive_tol {
            return Ok((cur, n));
        }
        prev = cur;
    }
    Err(pcyl_core::Error::NoConvergence(pcyl_core::spectral::MAX_ADAPTIVE_MODES - config.modes.n_start))
}

pub fn cmd_scatter(config: &RunConfig) -> std::result::Result<Artifact, ConfigError> {
    use rayon::prelude::*;
    let profile = config.profile()?;
    let spec = DomainSpec::radiating(profile, 0.0, config.domain.truncate_x).map_err(|e| ConfigError(e.to_string()))?;
    let s = &config.scatter;
    let omegas: Vec<f64> = if s.samples == 1 {
        vec![s.omega_min]
    } else {
        (0..s.samples).map(|j| s.omega_min + (s.omega_max - s.omega_min) * j as f64 / (s.samples - 1) as f64).collect()
    };
    let mut art = Artifact::new(
        config,
        "scatter",
        &["omega", "re_s1", "im_s1", "abs_s1", "arg_s1", "n_modes", "status", "message"],
    );
    let points: Vec<_> = omegas.par_iter().map(|w| scatter_point(config, &spec, *w)).collect();
    let mut n_max = 0;
    for (w, p) in omegas.iter().zip(points) {
        match p {
            Ok((s1, n)) => {
                n_max = n_max.max(n);
                art.push(
                    RowStatus::Ok,
                    vec![
                        (*w).into(),
                        s1.re.into(),
                        s1.im.into(),
                        s1.norm().into(),
                        s1.arg().into(),
                        n.into(),
                        "ok".into(),
                        Cell::Text(String::new()),
                    ],
                );
            }
            Err(e) => art.push(
                RowStatus::Failed,
                vec![
                    (*w).into(),
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                    "failed".into(),
                    Cell::Text(e.to_string()),
                ],
            ),
        }
    }
    if n_max > 0 && s.omega_min < s.omega_max {
        let peak = Transfer::new(spec, n_max, config.step_control())
            .and_then(|t| phase_derivative_peak(&t, s.omega_min, s.omega_max, s.samples.max(3)));
        match peak {
            Ok((w, d)) => {
                art.note("phase_derivative_peak_omega", format_float(w));
                art.note("phase_derivative_peak_value", format_float(d));
                art.note("phase_derivative_peak_n_modes", n_max.to_string());
            }
            Err(e) => art.note("phase_derivative_peak_error", e.to_string()),
        }
    }
    Ok(art)
}

pub fn cmd_ref_fd(config: &RunConfig) -> std::result::Result<Artifact, ConfigError> {
    let fd = &config.fd;
    let estimate: Result<FdEstimate> = match config.profile.family {
        Family::Pinched => cusp_truncation(config.profile.gamma, fd.cusp_cut)
            .and_then(|xt| cusp_grids(xt, fd.nx, fd.levels))
            .and_then(|grids| cusp_limit_estimate(config.profile.gamma, &grids)),
        Family::Uniform => {
            let [a, b] = config.interval();
            let p = Profile::uniform(Interval::new(a, b).map_err(|e| ConfigError(e.to_string()))?);
            fd_reference(&p, a, b, fd.nx, fd.ny, fd.levels)
        }
        Family::Indented => {
            let [a, b] = config.interval();
            fd_reference(&config.profile()?, a, b, fd.nx, fd.ny, fd.levels)
        }
    };
    let mut art = Artifact::new(config, "ref-fd", &["nx", "ny", "lambda1", "omega1", "richardson_estimate"]);
    art.modes = "none (finite differences)".to_string();
    match estimate {
        Ok(e) => {
            for (i, level) in e.levels.iter().enumerate() {
                let extrapolated = (i > 0).then(|| richardson(e.levels[i - 1].lambda, level.lambda));
                art.push(
                    RowStatus::Ok,
                    vec![
                        level.nx.into(),
                        level.ny.into(),
                        level.lambda.into(),
                        level.lambda.sqrt().into(),
                        Cell::opt(extrapolated),
                    ],
                );
            }
            art.note("richardson_lambda", format_float(e.richardson));
            art.note("richardson_omega", format_float(e.omega()));
            art.note("error_estimate", format_float(e.error_estimate));
        }
        Err(err) => {
            art.fail(err.to_string());
        }
    }
    Ok(art)
}

fn resonance_cells(r: &Result<ModeRun>) -> [Cell; 3] {
    [
        Cell::opt(field(r, |s| s.omega().re)),
        Cell::opt(field(r, |s| s.omega().im)),
        Cell::count(field(r, |s| s.n_modes_used)),
    ]
}

fn max_defect(studies: &[AlphaStudy]) -> f64 {
    let mut d: f64 = 0.0;
    for s in studies {
        for m in [Some(&s.resonance), s.trapped.as_ref()].into_iter().flatten().flatten() {
            d = d.max(m.max_ortho_defect);
        }
    }
    d
}

pub fn cmd_table1(config: &RunConfig) -> Artifact {
    table1_artifact(config, &alpha_studies(config, &TABLE1_ALPHAS, false))
}

/// Builds the resonance table from already computed studies.
pub fn table1_artifact(config: &RunConfig, studies: &[AlphaStudy]) -> Artifact {
    let mut art = Artifact::new(
        config,
        "table1",
        &[
            "alpha",
            "re_omega",
            "im_omega",
            "n_modes_used",
            "residual",
            "re_lambda",
            "im_lambda",
            "radius",
            "max_ortho_defect",
            "status",
            "message",
        ],
    );
    for s in studies {
        let (status, msg) = status_of(&s.resonance);
        let [re, im, n] = resonance_cells(&s.resonance);
        art.push(
            status,
            vec![
                s.alpha.into(),
                re,
                im,
                n,
                Cell::opt(field(&s.resonance, |r| r.residual)),
                Cell::opt(field(&s.resonance, |r| r.lambda.re)),
                Cell::opt(field(&s.resonance, |r| r.lambda.im)),
                Cell::opt(field(&s.resonance, |r| r.uncertainty)),
                Cell::opt(s.resonance.as_ref().ok().map(|m| m.max_ortho_defect)),
                status.label().into(),
                Cell::Text(msg),
            ],
        );
    }
    art.note("max_ortho_defect", format_float(max_defect(studies)));
    art
}

pub fn cmd_table2(config: &RunConfig) -> Artifact {
    let crit = config.alpha_critical();
    let alphas: Vec<f64> = TABLE2_EPSILONS.iter().map(|e| crit - e).collect();
    let mut studies = alpha_studies(config, &alphas, true);
    for (s, e) in studies.iter_mut().zip(TABLE2_EPSILONS) {
        s.epsilon = e;
    }
    table2_artifact(config, &studies)
}

/// Builds the gap table from already computed studies.
pub fn table2_artifact(config: &RunConfig, studies: &[AlphaStudy]) -> Artifact {
    let mut art = Artifact::new(
        config,
        "table2",
        &[
            "epsilon",
            "alpha",
            "omega1",
            "re_omega2",
            "im_omega2",
            "delta",
            "n_modes_trapped",
            "n_modes_resonance",
            "status",
            "message",
        ],
    );
    for s in studies {
        let trapped = s.trapped.as_ref().expect("table rows carry the trapped eigenvalue");
        let (status, msg) = combine(status_of(trapped), status_of(&s.resonance));
        let [re, im, n] = resonance_cells(&s.resonance);
        art.push(
            status,
            vec![
                s.epsilon.into(),
                s.alpha.into(),
                Cell::opt(field(trapped, |r| r.omega().re)),
                re,
                im,
                Cell::opt(s.delta()),
                Cell::count(field(trapped, |r| r.n_modes_used)),
                n,
                status.label().into(),
                Cell::Text(msg),
            ],
        );
    }
    art.note("max_ortho_defect", format_float(max_defect(studies)));
    art
}

pub fn cmd_sweep(config: &RunConfig) -> Artifact {
    sweep_artifact(config, &alpha_studies(config, &config.sweep.alphas, true))
}

/// Builds the sweep series and the exponent fit of `Im ω₂ ~ ε^p` over `ε < fit_eps_max`.
pub fn sweep_artifact(config: &RunConfig, studies: &[AlphaStudy]) -> Artifact {
    let mut art = Artifact::new(
        config,
        "sweep",
        &[
            "alpha",
            "epsilon",
            "omega1",
            "re_omega2",
            "im_omega2",
            "n_modes_trapped",
            "n_modes_resonance",
            "status",
            "message",
        ],
    );
    let mut fit_points = Vec::new();
    for s in studies {
        let trapped = s.trapped.as_ref().expect("sweep rows carry the trapped eigenvalue");
        let (status, msg) = combine(status_of(trapped), status_of(&s.resonance));
        let [re, im, n] = resonance_cells(&s.resonance);
        if let (RowStatus::Ok, Ok(r)) = (status, &s.resonance) {
            if s.epsilon < config.sweep.fit_eps_max {
                fit_points.push((s.epsilon, r.omega().im));
            }
        }
        art.push(
            status,
            vec![
                s.alpha.into(),
                s.epsilon.into(),
                Cell::opt(field(trapped, |r| r.omega().re)),
                re,
                im,
                Cell::count(field(trapped, |r| r.n_modes_used)),
                n,
                status.label().into(),
                Cell::Text(msg),
            ],
        );
    }
    art.note("fit_eps_max", format_float(config.sweep.fit_eps_max));
    if !studies.is_empty() {
        match fit_power_law(&fit_points) {
            Ok(fit) => {
                art.note("fit_exponent", format_float(fit.exponent));
                art.note("fit_intercept", format_float(fit.intercept));
                art.note("fit_residual", format_float(fit.residual));
                art.note("fit_points", fit.points.to_string());
            }
            Err(e) => art.note("fit_error", e.to_string()),
        }
    }
    art
}
