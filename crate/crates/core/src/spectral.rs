//! Root finding for the characteristic determinant: real eigenvalues by bracketing,
//! complex resonances by shrinking winding-number contours, and the reflection
//! coefficient of the scattering problem.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::coupled_mode::{assemble_pqr, transverse_exponent, BetaTable};
use crate::error::{Error, Result};
use crate::geometry::{golden_max, EndCondition};
use crate::transfer::{CharacteristicValue, Direction, Transfer};

type C64 = Complex64;

/// Smallest admissible contour radius.
pub const MIN_CONTOUR_RADIUS: f64 = 1e-5;
/// Radius below which winding counts have not been validated.
pub const RELIABLE_CONTOUR_RADIUS: f64 = 1e-4;
/// Largest mode count tried by [`adaptive_modes`].
pub const MAX_ADAPTIVE_MODES: usize = 40;

/// A source of characteristic-determinant values.
pub trait Characteristic {
    fn n_modes(&self) -> usize;

    fn evaluate(&self, lambda: C64) -> Result<CharacteristicValue>;

    /// Evaluates a batch of points. Implementations may run these concurrently but must
    /// return results in input order.
    fn evaluate_many(&self, lambdas: &[C64]) -> Vec<Result<CharacteristicValue>> {
        lambdas.iter().map(|l| self.evaluate(*l)).collect()
    }
}

impl Characteristic for Transfer {
    fn n_modes(&self) -> usize {
        Transfer::n_modes(self)
    }

    fn evaluate(&self, lambda: C64) -> Result<CharacteristicValue> {
        self.characteristic(lambda)
    }
}

impl<T: Characteristic + ?Sized> Characteristic for &T {
    fn n_modes(&self) -> usize {
        (**self).n_modes()
    }

    fn evaluate(&self, lambda: C64) -> Result<CharacteristicValue> {
        (**self).evaluate(lambda)
    }

    fn evaluate_many(&self, lambdas: &[C64]) -> Vec<Result<CharacteristicValue>> {
        (**self).evaluate_many(lambdas)
    }
}

/// Circle in the `λ`-plane sampled at `n_samples` equally spaced points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Contour {
    pub center: C64,
    pub radius: f64,
    pub n_samples: usize,
}

impl Contour {
    pub fn new(center: C64, radius: f64) -> Result<Self> {
        Self::with_samples(center, radius, 64)
    }

    pub fn with_samples(center: C64, radius: f64, n_samples: usize) -> Result<Self> {
        if !(radius >= MIN_CONTOUR_RADIUS) || !radius.is_finite() {
            return Err(Error::InvalidParameter("contour radius below 1e-5"));
        }
        if n_samples < 64 || !n_samples.is_multiple_of(2) {
            return Err(Error::InvalidParameter("contours need an even sample count of at least 64"));
        }
        if !center.re.is_finite() || !center.im.is_finite() {
            return Err(Error::InvalidParameter("contour centre must be finite"));
        }
        Ok(Self { center, radius, n_samples })
    }

    /// Whether the radius is below the range where counts have been validated.
    pub fn below_reliable_radius(&self) -> bool {
        self.radius < RELIABLE_CONTOUR_RADIUS
    }

    fn point(&self, j: usize, n: usize) -> C64 {
        let t = 2.0 * PI * j as f64 / n as f64;
        self.center + C64::from_polar(self.radius, t)
    }
}

/// Settings for [`count_zeros_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CountOptions {
    pub max_samples: usize,
    /// Largest accepted distance of the phase total from a multiple of `2π`, in turns.
    pub max_quality: f64,
    /// Samples with `|f| < zero_tol · max|f|` are treated as zeros on the contour.
    pub zero_tol: f64,
    /// Minimum distance from the contour to any threshold `(πk)²`, `k ≤ N`.
    /// `None` disables the check.
    pub threshold_guard: Option<f64>,
}

impl Default for CountOptions {
    fn default() -> Self {
        Self { max_samples: 4096, max_quality: 0.05, zero_tol: 1e-12, threshold_guard: Some(1e-3) }
    }
}

/// Result of a winding-number evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct WindingCount {
    pub count: i64,
    /// `max(|A/2π − count|, |A − A_half|/2π)` where `A_half` uses every other sample.
    pub quality: f64,
    /// The contour with the sample count actually used.
    pub contour: Contour,
    /// `(1/2πi) ∮ λ d log f`, divided by the count when it is nonzero.
    pub log_moment: C64,
    /// `c + 2 ((1/2π) ∮ λ d arg f − c)`, divided analogously.
    pub phase_moment: C64,
    /// `max|f| / min|f|` over the samples.
    pub modulus_ratio: f64,
    pub evaluations: usize,
    pub max_ortho_defect: f64,
}

impl WindingCount {
    /// Preferred root estimate: the phase moment, which is exact for `f = u(λ) (λ − λ₀)/|λ − λ₀|`
    /// with constant `u` and has an `O(r²)` bias otherwise. The logarithmic moment is
    /// exact only for holomorphic `f`.
    pub fn root_estimate(&self) -> C64 {
        let e = self.phase_moment;
        if e.re.is_finite() && e.im.is_finite() && (e - self.contour.center).norm() <= self.contour.radius {
            e
        } else {
            self.log_moment
        }
    }
}

/// Winding number of `f` around `contour` with default options.
pub fn count_zeros<C: Characteristic>(contour: &Contour, f: &C) -> Result<WindingCount> {
    count_zeros_with(contour, f, &CountOptions::default())
}

/// Winding number of `f` around `contour`, doubling the sample count until the
/// principal-value phase increments stay below `π/2`.
pub fn count_zeros_with<C: Characteristic>(contour: &Contour, f: &C, opts: &CountOptions) -> Result<WindingCount> {
    if let Some(guard) = opts.threshold_guard {
        for k in 1..=f.n_modes() {
            let t = (PI * k as f64).powi(2);
            let d = ((contour.center - t).norm() - contour.radius).abs();
            if d < guard {
                return Err(Error::NearThreshold { mode: k, distance: d });
            }
        }
    }
    let mut n = contour.n_samples;
    let pts: Vec<C64> = (0..n).map(|j| contour.point(j, n)).collect();
    let mut vals = collect(f.evaluate_many(&pts))?;
    let mut evaluations = n;
    loop {
        let max_mod = vals.iter().map(|v| v.value.norm()).fold(0.0, f64::max);
        for v in &vals {
            let m = v.value.norm();
            if !(m >= opts.zero_tol * max_mod) || !m.is_finite() || max_mod == 0.0 {
                return Err(Error::ZeroOnContour(v.lambda));
            }
        }
        let incr: Vec<f64> = (0..n).map(|j| (vals[(j + 1) % n].value / vals[j].value).arg()).collect();
        let worst = incr.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        if worst <= 0.5 * PI {
            let total: f64 = incr.iter().sum();
            let half: f64 = (0..n / 2).map(|j| (vals[(2 * j + 2) % n].value / vals[2 * j].value).arg()).sum();
            let turns = total / (2.0 * PI);
            let count = turns.round() as i64;
            let quality = (turns - count as f64).abs().max((total - half).abs() / (2.0 * PI));
            if quality > opts.max_quality {
                return Err(Error::NonIntegerWinding { quality });
            }
            let mut log_m = C64::new(0.0, 0.0);
            let mut arg_m = C64::new(0.0, 0.0);
            let min_mod = vals.iter().map(|v| v.value.norm()).fold(f64::INFINITY, f64::min);
            for j in 0..n {
                let mid = contour.center + C64::from_polar(contour.radius, 2.0 * PI * (j as f64 + 0.5) / n as f64);
                let dlog = C64::new((vals[(j + 1) % n].value.norm() / vals[j].value.norm()).ln(), incr[j]);
                log_m += mid * dlog;
                arg_m += mid * incr[j];
            }
            log_m /= C64::new(0.0, 2.0 * PI);
            arg_m /= 2.0 * PI;
            let (log_moment, phase_moment) = if count != 0 {
                let c = count as f64;
                (log_m / c, contour.center + 2.0 * (arg_m / c - contour.center))
            } else {
                (contour.center, contour.center)
            };
            let max_ortho_defect = vals.iter().map(|v| v.max_ortho_defect).fold(0.0, f64::max);
            return Ok(WindingCount {
                count,
                quality,
                contour: Contour { n_samples: n, ..*contour },
                log_moment,
                phase_moment,
                modulus_ratio: max_mod / min_mod,
                evaluations,
                max_ortho_defect,
            });
        }
        if 2 * n > opts.max_samples {
            return Err(Error::NonIntegerWinding { quality: worst / (2.0 * PI) });
        }
        let mids: Vec<C64> = (0..n).map(|j| contour.point(2 * j + 1, 2 * n)).collect();
        let extra = collect(f.evaluate_many(&mids))?;
        evaluations += n;
        let mut merged = Vec::with_capacity(2 * n);
        for (a, b) in vals.into_iter().zip(extra) {
            merged.push(a);
            merged.push(b);
        }
        vals = merged;
        n *= 2;
    }
}

fn collect(v: Vec<Result<CharacteristicValue>>) -> Result<Vec<CharacteristicValue>> {
    v.into_iter().collect()
}

/// Whether a result is a real eigenvalue or a complex resonance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectralKind {
    Eigenvalue,
    Resonance,
}

/// One contour of a resonance search with its winding count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContourRecord {
    pub contour: Contour,
    pub count: i64,
}

/// A located eigenvalue or resonance.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralResult {
    pub kind: SpectralKind,
    pub lambda: C64,
    pub n_modes_used: usize,
    /// `|f̃|` at the reported value.
    pub residual: f64,
    pub contour_history: Vec<ContourRecord>,
    pub converged: bool,
    pub max_ortho_defect: f64,
    pub evaluations: usize,
    /// Final bracket width or contour radius.
    pub uncertainty: f64,
}

impl SpectralResult {
    /// `ω = √λ` on the branch with `Re ω > 0`, with the imaginary part reported as `|Im ω|`.
    pub fn omega(&self) -> C64 {
        let w = self.lambda.sqrt();
        C64::new(w.re.abs(), w.im.abs())
    }
}

/// Settings for [`find_eigenvalue_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenOptions {
    /// Relative bracket width at which iteration stops.
    pub tol: f64,
    pub max_iter: usize,
    /// Bracket search step relative to `max(1, seed)`.
    pub search_step: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 50, search_step: 0.005 }
    }
}

/// Real eigenvalue nearest to the seed `λ`, with default options.
pub fn find_eigenvalue(spec: &crate::geometry::DomainSpec, seed: f64, n_modes: usize) -> Result<SpectralResult> {
    let t = Transfer::new(spec.clone(), n_modes, Default::default())?;
    find_eigenvalue_with(&t, seed, &EigenOptions::default())
}

struct RealFn<'a, C> {
    f: &'a C,
    phase: C64,
    evals: usize,
    defect: f64,
}

impl<C: Characteristic> RealFn<'_, C> {
    fn eval(&mut self, x: f64) -> Result<f64> {
        let v = self.f.evaluate(C64::new(x, 0.0))?;
        self.evals += 1;
        self.defect = self.defect.max(v.max_ortho_defect);
        if self.phase == C64::new(0.0, 0.0) && v.value.norm() > 0.0 {
            self.phase = v.value.conj() / v.value.norm();
        }
        Ok((v.value * self.phase).re)
    }
}

/// Real eigenvalue nearest to `seed`: brackets a sign change of the phase-normalized
/// determinant by stepping outwards, then refines with Illinois regula falsi safeguarded
/// by bisection.
pub fn find_eigenvalue_with<C: Characteristic>(f: &C, seed: f64, opts: &EigenOptions) -> Result<SpectralResult> {
    if !(seed > 0.0) || !seed.is_finite() {
        return Err(Error::InvalidParameter("eigenvalue seed must be positive"));
    }
    let (lo_lim, hi_lim) = (0.25 * seed, 4.0 * seed);
    let mut rf = RealFn { f, phase: C64::new(0.0, 0.0), evals: 0, defect: 0.0 };
    let step = opts.search_step * seed.max(1.0);
    let f0 = rf.eval(seed)?;
    if f0 == 0.0 {
        return finish_real(&mut rf, seed, 0.0);
    }
    let (mut up, mut fup) = (seed, f0);
    let (mut dn, mut fdn) = (seed, f0);
    let mut bracket = None;
    let mut k = 0;
    while bracket.is_none() {
        k += 1;
        let (xu, xd) = (seed + k as f64 * step, seed - k as f64 * step);
        let can_up = xu <= hi_lim;
        let can_dn = xd >= lo_lim;
        if !can_up && !can_dn {
            return Err(Error::NoBracket);
        }
        if can_up {
            let v = rf.eval(xu)?;
            if v * fup <= 0.0 {
                bracket = Some((up, fup, xu, v));
            }
            up = xu;
            fup = v;
        }
        if bracket.is_none() && can_dn {
            let v = rf.eval(xd)?;
            if v * fdn <= 0.0 {
                bracket = Some((xd, v, dn, fdn));
            }
            dn = xd;
            fdn = v;
        }
    }
    let (a, fa, b, fb) = bracket.unwrap();
    let (root, width) = refine_bracket(&mut rf, a, fa, b, fb, opts)?;
    if root < lo_lim || root > hi_lim {
        return Err(Error::DivergedFromSeed { iterate: root, lo: lo_lim, hi: hi_lim });
    }
    finish_real(&mut rf, root, width)
}

fn finish_real<C: Characteristic>(rf: &mut RealFn<'_, C>, root: f64, width: f64) -> Result<SpectralResult> {
    let v = rf.f.evaluate(C64::new(root, 0.0))?;
    rf.evals += 1;
    Ok(SpectralResult {
        kind: SpectralKind::Eigenvalue,
        lambda: C64::new(root, 0.0),
        n_modes_used: rf.f.n_modes(),
        residual: v.value.norm(),
        contour_history: Vec::new(),
        converged: true,
        max_ortho_defect: rf.defect.max(v.max_ortho_defect),
        evaluations: rf.evals,
        uncertainty: width,
    })
}

fn refine_bracket<C: Characteristic>(
    rf: &mut RealFn<'_, C>,
    mut a: f64,
    mut fa: f64,
    mut b: f64,
    mut fb: f64,
    opts: &EigenOptions,
) -> Result<(f64, f64)> {
    if fa == 0.0 {
        return Ok((a, 0.0));
    }
    if fb == 0.0 {
        return Ok((b, 0.0));
    }
    let mut side = 0i8;
    let mut widths = [b - a; 3];
    for it in 0..opts.max_iter {
        let width = b - a;
        let scale = a.abs().max(b.abs()).max(1.0);
        if width <= opts.tol * scale {
            let c = if (fb - fa).abs() > 0.0 { (a * fb - b * fa) / (fb - fa) } else { 0.5 * (a + b) };
            return Ok((c.clamp(a, b), width));
        }
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !(c > a && c < b) || (it >= 2 && width > 0.5 * widths[(it + 1) % 3]) {
            c = 0.5 * (a + b);
            side = 0;
        }
        widths[it % 3] = width;
        let fc = rf.eval(c)?;
        if fc == 0.0 {
            return Ok((c, 0.0));
        }
        if fc * fb < 0.0 {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        } else {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        }
    }
    Err(Error::NoConvergence(opts.max_iter))
}

/// A real root found by [`scan_eigenvalues`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScannedEigenvalue {
    pub lambda: f64,
    /// Number of singular values of the stacked matrix that vanish at the root.
    pub multiplicity: usize,
}

/// All real roots of the characteristic determinant in `[lo, hi]`, found from sign
/// changes on an `n_samples` grid and from near-zero minima of the smallest singular
/// value of the stacked matrix (the latter catches roots of even multiplicity).
pub fn scan_eigenvalues(transfer: &Transfer, lo: f64, hi: f64, n_samples: usize) -> Result<Vec<ScannedEigenvalue>> {
    if !(lo < hi) || n_samples < 3 {
        return Err(Error::InvalidParameter("scan needs lo < hi and at least 3 samples"));
    }
    let sv = |x: f64| -> Result<(C64, DVector<f64>)> {
        let (m, _) = transfer.stacked_matrix(C64::new(x, 0.0))?;
        let s = m.clone().singular_values();
        Ok((m.determinant(), s))
    };
    let xs: Vec<f64> = (0..n_samples).map(|j| lo + (hi - lo) * j as f64 / (n_samples - 1) as f64).collect();
    let mut dets = Vec::with_capacity(n_samples);
    let mut smin = Vec::with_capacity(n_samples);
    for &x in &xs {
        let (d, s) = sv(x)?;
        dets.push(d);
        smin.push(s.min());
    }
    let phase = dets.iter().find(|d| d.norm() > 0.0).map(|d| d.conj() / d.norm()).unwrap_or(C64::new(1.0, 0.0));
    let re: Vec<f64> = dets.iter().map(|d| (d * phase).re).collect();
    let rel_zero = 1e-6;
    let multiplicity = |x: f64| -> Result<usize> {
        let (_, s) = sv(x)?;
        let smax = s.max();
        Ok(s.iter().filter(|v| **v < rel_zero * smax).count())
    };
    let mut roots: Vec<ScannedEigenvalue> = Vec::new();
    let mut rf = RealFn { f: transfer, phase, evals: 0, defect: 0.0 };
    let opts = EigenOptions::default();
    for j in 0..n_samples - 1 {
        if re[j] == 0.0 {
            roots.push(ScannedEigenvalue { lambda: xs[j], multiplicity: multiplicity(xs[j])?.max(1) });
        } else if re[j] * re[j + 1] < 0.0 {
            let (r, _) = refine_bracket(&mut rf, xs[j], re[j], xs[j + 1], re[j + 1], &opts)?;
            roots.push(ScannedEigenvalue { lambda: r, multiplicity: multiplicity(r)?.max(1) });
        }
    }
    for j in 1..n_samples - 1 {
        if !(smin[j] <= smin[j - 1] && smin[j] <= smin[j + 1]) {
            continue;
        }
        if re[j - 1] * re[j] <= 0.0 || re[j] * re[j + 1] <= 0.0 {
            continue;
        }
        let g = |x: f64| match sv(x) {
            Ok((_, s)) => -s.min(),
            Err(_) => f64::NEG_INFINITY,
        };
        let x = golden_max(g, xs[j - 1], xs[j + 1], 1e-12 * hi.abs().max(1.0));
        let m = multiplicity(x)?;
        if m > 0 {
            roots.push(ScannedEigenvalue { lambda: x, multiplicity: m });
        }
    }
    roots.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap_or(core::cmp::Ordering::Equal));
    Ok(roots)
}

/// Settings for [`locate_resonance_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResonanceOptions {
    /// Radius of the first contour in the `λ`-plane.
    pub initial_radius: f64,
    /// Radius at which shrinking stops.
    pub target_radius: f64,
    /// How often the first contour is doubled when it encloses no root.
    pub expansions: usize,
    pub count: CountOptions,
}

impl Default for ResonanceOptions {
    fn default() -> Self {
        Self { initial_radius: 0.5, target_radius: 1e-4, expansions: 2, count: CountOptions::default() }
    }
}

/// Resonance near `seed_omega` with default options.
pub fn locate_resonance(spec: &crate::geometry::DomainSpec, seed_omega: C64, n_modes: usize) -> Result<SpectralResult> {
    let t = Transfer::new(spec.clone(), n_modes, Default::default())?;
    locate_resonance_with(&t, seed_omega, &ResonanceOptions::default())
}

/// Resonance near `seed_omega`: a contour of radius `initial_radius` around `seed_omega²`
/// must enclose exactly one root, which is then isolated by halving the radius and
/// recentring on the moment estimate. When a recentred disc loses the root, four
/// overlapping sub-discs covering the previous disc are tried. The final contour is
/// checked by shifting it `1.5 r` in four directions, where no root may be found.
pub fn locate_resonance_with<C: Characteristic>(
    f: &C,
    seed_omega: C64,
    opts: &ResonanceOptions,
) -> Result<SpectralResult> {
    if !(opts.target_radius >= MIN_CONTOUR_RADIUS) || !(opts.initial_radius >= opts.target_radius) {
        return Err(Error::InvalidParameter("need 1e-5 <= target radius <= initial radius"));
    }
    let mut history = Vec::new();
    let mut evaluations = 0;
    let mut defect: f64 = 0.0;
    let mut run = |c: Contour, history: &mut Vec<ContourRecord>| -> Result<WindingCount> {
        let w = count_zeros_with(&c, f, &opts.count)?;
        evaluations += w.evaluations;
        defect = defect.max(w.max_ortho_defect);
        history.push(ContourRecord { contour: c, count: w.count });
        Ok(w)
    };
    let mut r = opts.initial_radius;
    let seed = seed_omega * seed_omega;
    let mut current = run(Contour::new(seed, r)?, &mut history)?;
    let mut expansions = 0;
    while current.count == 0 && expansions < opts.expansions {
        r *= 2.0;
        expansions += 1;
        current = run(Contour::new(seed, r)?, &mut history)?;
    }
    match current.count {
        1 => {}
        0 => return Err(Error::LostRoot { last: current.contour }),
        n => return Err(Error::MultipleRoots(n)),
    }
    while r > opts.target_radius {
        let center = current.contour.center;
        let r_new = (0.5 * r).max(opts.target_radius);
        let primary = current.root_estimate();
        let secondary = current.log_moment;
        let mut candidates: Vec<(C64, f64)> = Vec::with_capacity(8);
        if (primary - center).norm() > 0.5 * r {
            candidates.push((center, r_new));
        }
        for est in [primary, secondary] {
            if (est - center).norm() + r_new <= r * 1.0001 && est.re.is_finite() && est.im.is_finite() {
                candidates.push((est, r_new));
            }
        }
        if !candidates.contains(&(center, r_new)) {
            candidates.push((center, r_new));
        }
        let sub = (0.75 * r).max(opts.target_radius);
        for (dx, dy) in [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)] {
            candidates.push((center + C64::new(dx, dy) * (0.5 * r), sub));
        }
        let mut next = None;
        for (c, rr) in candidates {
            let w = match run(Contour::new(c, rr)?, &mut history) {
                Ok(w) => w,
                Err(Error::ZeroOnContour(_)) | Err(Error::NonIntegerWinding { .. }) => continue,
                Err(e) => return Err(e),
            };
            if w.count == 1 {
                next = Some((w, rr));
                break;
            }
        }
        match next {
            Some((w, rr)) => {
                current = w;
                r = rr;
            }
            None => return Err(Error::LostRoot { last: current.contour }),
        }
    }
    let center = current.contour.center;
    let mut converged = true;
    for k in 0..4 {
        let shift = C64::from_polar(1.5 * r, 0.5 * PI * k as f64);
        match run(Contour::new(center + shift, r)?, &mut history) {
            Ok(w) if w.count == 0 => {}
            _ => converged = false,
        }
    }
    let mut lambda = current.root_estimate();
    if !((lambda - center).norm() <= r) {
        lambda = center;
    }
    let v = f.evaluate(lambda)?;
    evaluations += 1;
    Ok(SpectralResult {
        kind: SpectralKind::Resonance,
        lambda,
        n_modes_used: f.n_modes(),
        residual: v.value.norm(),
        contour_history: history,
        converged,
        max_ortho_defect: defect.max(v.max_ortho_defect),
        evaluations,
        uncertainty: r,
    })
}

/// Repeats `task` with `N = n_start, n_start + 1, …` until two consecutive results have
/// `|Δω| ≤ tol`, and returns the later one. The previous result is passed to each call
/// so it can seed the next search.
pub fn adaptive_modes<F>(mut task: F, n_start: usize, tol: f64) -> Result<SpectralResult>
where
    F: FnMut(usize, Option<&SpectralResult>) -> Result<SpectralResult>,
{
    if !(2..MAX_ADAPTIVE_MODES).contains(&n_start) || !(tol > 0.0) {
        return Err(Error::InvalidParameter("adaptive mode search needs 2 <= n_start < 40 and tol > 0"));
    }
    let mut prev = task(n_start, None)?;
    for n in n_start + 1..=MAX_ADAPTIVE_MODES {
        let mut cur = task(n, Some(&prev))?;
        cur.n_modes_used = n;
        if (cur.omega() - prev.omega()).norm() <= tol {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NoConvergence(MAX_ADAPTIVE_MODES - n_start))
}

/// Reflection coefficient of the trapped-wave scattering problem at real frequency `ω`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScatteringResult {
    pub omega: f64,
    /// Coefficient of the reflected wave `e^{t_1 x}`, with incident wave `e^{−t_1 x}`.
    pub s1: C64,
    /// Amplitudes of all modes at the truncation point: `s_k e^{t_k X}`.
    pub amplitudes_at_x: Vec<C64>,
    pub n_modes: usize,
}

/// Solves the scattering problem at `ω ∈ (π, 2π)` on the domain of `transfer`, whose
/// right end must carry the radiation condition.
pub fn scattering_coefficient(transfer: &Transfer, omega: f64) -> Result<ScatteringResult> {
    let spec = transfer.spec();
    if spec.right != EndCondition::Radiation || transfer.direction() != Direction::Forward {
        return Err(Error::InvalidDomain("scattering needs a forward transfer towards a radiating end"));
    }
    let lambda = C64::new(omega * omega, 0.0);
    if !(omega > PI) {
        return Err(Error::InvalidParameter("scattering needs omega above the first threshold"));
    }
    let n = transfer.n_modes();
    let (_, x) = spec.endpoints();
    let state = transfer.integrate(lambda)?;
    let betas = BetaTable::new(n)?;
    let c = assemble_pqr(x, lambda, n, &spec.profile, &betas)?;
    let phi = c.width();
    let mut t = Vec::with_capacity(n);
    for k in 1..=n {
        t.push(transverse_exponent(k, lambda)?);
    }
    // Column j of `v` is the state (h, φh' + Qᵀh) of mode j's tail solution at X.
    let mut v = DMatrix::<C64>::zeros(2 * n, n);
    for j in 0..n {
        v[(j, j)] = C64::new(1.0, 0.0);
        for r in 0..n {
            v[(n + r, j)] = C64::from(c.q[(j, r)]);
        }
        v[(n + j, j)] += t[j] * phi;
    }
    let decay = (-t[0] * x).exp();
    let mut inc = DVector::<C64>::zeros(2 * n);
    inc[0] = decay;
    for r in 0..n {
        inc[n + r] = C64::from(c.q[(0, r)]) * decay;
    }
    inc[n] += -t[0] * phi * decay;
    let a = &state.psi_tilde * &v;
    let rhs = -(&state.psi_tilde * inc);
    let sv = a.clone().singular_values();
    if !(sv.min() > 1e-12 * sv.max()) {
        return Err(Error::SingularSystem);
    }
    let s = a.lu().solve(&rhs).ok_or(Error::SingularSystem)?;
    let s1 = s[0] * (-t[0] * x).exp();
    Ok(ScatteringResult { omega, s1, amplitudes_at_x: s.iter().copied().collect(), n_modes: n })
}

/// Location and height of the largest `|d arg s₁ / dω|` on `[lo, hi]`, from `n_samples`
/// equally spaced frequencies refined by golden-section search on a central-difference
/// derivative.
pub fn phase_derivative_peak(transfer: &Transfer, lo: f64, hi: f64, n_samples: usize) -> Result<(f64, f64)> {
    if !(lo < hi) || n_samples < 3 {
        return Err(Error::InvalidParameter("peak search needs lo < hi and at least 3 samples"));
    }
    let h = (hi - lo) / (n_samples - 1) as f64;
    let mut s = Vec::with_capacity(n_samples);
    for j in 0..n_samples {
        s.push(scattering_coefficient(transfer, lo + h * j as f64)?.s1);
    }
    let mut best = (0, 0.0);
    for j in 0..n_samples - 1 {
        let d = (s[j + 1] / s[j]).arg().abs() / h;
        if d > best.1 {
            best = (j, d);
        }
    }
    let a = lo + h * best.0 as f64;
    let b = a + h;
    let dh = (1e-3 * h).max(1e-9);
    let deriv = |w: f64| -> f64 {
        match (scattering_coefficient(transfer, w - dh), scattering_coefficient(transfer, w + dh)) {
            (Ok(m), Ok(p)) => (p.s1 / m.s1).arg().abs() / (2.0 * dh),
            _ => 0.0,
        }
    };
    let lo_g = (a - h).max(lo + dh);
    let hi_g = (b + h).min(hi - dh);
    let w = golden_max(deriv, lo_g, hi_g, 1e-10);
    let d = deriv(w);
    Ok(if d >= best.1 { (w, d) } else { (a + 0.5 * h, best.1) })
}
