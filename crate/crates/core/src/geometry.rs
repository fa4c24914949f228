//! Width profiles of the cylinder and the domains the solvers act on.

use alloc::sync::Arc;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Default bound on `|φ'|` beyond the truncation point.
pub const DEFAULT_TAIL_TOL: f64 = 1e-4;

const SAMPLES: usize = 10_000;
const TAIL_WINDOW: f64 = 10.0;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Interval `[a, b]`, where `b` may be `+∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() || b.is_nan() || b <= a {
            return Err(Error::InvalidParameter("interval needs finite a < b"));
        }
        Ok(Self { a, b })
    }

    pub fn half_line(a: f64) -> Result<Self> {
        Self::new(a, f64::INFINITY)
    }

    pub fn is_unbounded(&self) -> bool {
        self.b.is_infinite()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.a && x <= self.b
    }
}

/// The two-bump indentation `φ(x) = 1 − α (e^{−(x−γ)²} + e^{−(x+γ)²})`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IndentedWaveguide {
    pub alpha: f64,
    pub gamma: f64,
}

impl IndentedWaveguide {
    /// Fails unless `0 ≤ α < α*(γ)` and `γ > 0`.
    pub fn new(alpha: f64, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter("gamma must be positive and finite"));
        }
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter("alpha must be non-negative and finite"));
        }
        let critical = alpha_critical(gamma);
        if alpha >= critical {
            return Err(Error::AlphaTooLarge { alpha, critical });
        }
        Ok(Self { alpha, gamma })
    }

    pub fn width(&self, x: f64) -> f64 {
        1.0 - self.alpha * bump_sum(x, self.gamma)
    }

    pub fn slope(&self, x: f64) -> f64 {
        -self.alpha * bump_sum_deriv(x, self.gamma)
    }

    /// Distance `α* − α` to the pinch-off value.
    pub fn epsilon(&self) -> f64 {
        alpha_critical(self.gamma) - self.alpha
    }
}

/// `e^{−(x−γ)²} + e^{−(x+γ)²}`.
pub fn bump_sum(x: f64, gamma: f64) -> f64 {
    (-(x - gamma) * (x - gamma)).exp() + (-(x + gamma) * (x + gamma)).exp()
}

fn bump_sum_deriv(x: f64, gamma: f64) -> f64 {
    -2.0 * (x - gamma) * (-(x - gamma) * (x - gamma)).exp() - 2.0 * (x + gamma) * (-(x + gamma) * (x + gamma)).exp()
}

/// Location of the maximum of [`bump_sum`] on `x ≥ 0`.
pub fn bump_peak(gamma: f64) -> f64 {
    let hi = gamma + 4.0;
    let f = |x: f64| bump_sum(x, gamma);
    let (mut best, mut best_val) = (0.0, f(0.0));
    for i in 1..=SAMPLES {
        let x = hi * i as f64 / SAMPLES as f64;
        let v = f(x);
        if v > best_val {
            best = x;
            best_val = v;
        }
    }
    let h = hi / SAMPLES as f64;
    let (mut lo, mut up) = ((best - h).max(0.0), (best + h).min(hi));
    if bump_sum_deriv(lo, gamma) <= 0.0 {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + up);
        if bump_sum_deriv(mid, gamma) > 0.0 {
            lo = mid;
        } else {
            up = mid;
        }
    }
    0.5 * (lo + up)
}

/// Largest `α` for which `φ` stays positive: `1 / max_x bump_sum(x, γ)`.
pub fn alpha_critical(gamma: f64) -> f64 {
    1.0 / bump_sum(bump_peak(gamma), gamma)
}

pub(crate) fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

#[derive(Clone)]
enum Shape {
    Uniform,
    Indented(IndentedWaveguide),
    Custom { eval: ScalarFn, deriv: Option<ScalarFn> },
}

/// Width function `φ` on an interval, with an optional point beyond which it is flat.
#[derive(Clone)]
pub struct Profile {
    shape: Shape,
    interval: Interval,
    flat_tail_start: Option<f64>,
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let shape = match &self.shape {
            Shape::Uniform => "uniform".into(),
            Shape::Indented(w) => alloc::format!("{w:?}"),
            Shape::Custom { deriv, .. } => {
                alloc::format!("custom(analytic derivative: {})", deriv.is_some())
            }
        };
        f.debug_struct("Profile")
            .field("shape", &shape)
            .field("interval", &self.interval)
            .field("flat_tail_start", &self.flat_tail_start)
            .finish()
    }
}

impl Profile {
    /// The straight strip `φ ≡ 1`.
    pub fn uniform(interval: Interval) -> Self {
        Self { shape: Shape::Uniform, interval, flat_tail_start: Some(interval.a) }
    }

    /// The indented waveguide on `[0, ∞)`.
    pub fn indented(alpha: f64, gamma: f64) -> Result<Self> {
        let w = IndentedWaveguide::new(alpha, gamma)?;
        let mut p = Self { shape: Shape::Indented(w), interval: Interval::half_line(0.0)?, flat_tail_start: None };
        p.flat_tail_start = Some(p.find_flat_tail(gamma, DEFAULT_TAIL_TOL));
        Ok(p)
    }

    /// A user supplied profile. Without `deriv` the slope is taken by central differences.
    pub fn custom(
        eval: ScalarFn,
        deriv: Option<ScalarFn>,
        interval: Interval,
        flat_tail_start: Option<f64>,
    ) -> Result<Self> {
        let p = Self { shape: Shape::Custom { eval, deriv }, interval, flat_tail_start };
        let hi = if interval.is_unbounded() { flat_tail_start.unwrap_or(interval.a) + TAIL_WINDOW } else { interval.b };
        p.check_positive(interval.a, hi)?;
        Ok(p)
    }

    /// The profile at the pinch-off value `α = α*(γ)`, restricted to `[0, x_end]` with
    /// `x_end` short of the pinch point.
    pub fn pinched(gamma: f64, x_end: f64) -> Result<Self> {
        if !(x_end < bump_peak(gamma)) {
            return Err(Error::InvalidDomain("pinched profile must end before the pinch point"));
        }
        let astar = alpha_critical(gamma);
        let eval: ScalarFn = Arc::new(move |x| 1.0 - astar * bump_sum(x, gamma));
        let deriv: ScalarFn = Arc::new(move |x| -astar * bump_sum_deriv(x, gamma));
        Self::custom(eval, Some(deriv), Interval::new(0.0, x_end)?, None)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Uniform => 1.0,
            Shape::Indented(w) => w.width(x),
            Shape::Custom { eval, .. } => eval(x),
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Uniform => 0.0,
            Shape::Indented(w) => w.slope(x),
            Shape::Custom { deriv: Some(d), .. } => d(x),
            Shape::Custom { eval, deriv: None } => {
                let h = 1e-5 * (1.0 + x.abs());
                (eval(x + h) - eval(x - h)) / (2.0 * h)
            }
        }
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn flat_tail_start(&self) -> Option<f64> {
        self.flat_tail_start
    }

    pub fn indentation(&self) -> Option<IndentedWaveguide> {
        match self.shape {
            Shape::Indented(w) => Some(w),
            _ => None,
        }
    }

    /// Smallest width on `[lo, hi]` with its location.
    pub fn min_width(&self, lo: f64, hi: f64) -> (f64, f64) {
        let (mut xm, mut fm) = (lo, self.eval(lo));
        for i in 1..=SAMPLES {
            let x = lo + (hi - lo) * i as f64 / SAMPLES as f64;
            let v = self.eval(x);
            if v < fm {
                xm = x;
                fm = v;
            }
        }
        let h = (hi - lo) / SAMPLES as f64;
        let x = golden_max(|x| -self.eval(x), (xm - h).max(lo), (xm + h).min(hi), 1e-13);
        let v = self.eval(x);
        if v < fm {
            (x, v)
        } else {
            (xm, fm)
        }
    }

    /// Fails with [`Error::NonPositiveWidth`] if `φ ≤ 0` somewhere on `[lo, hi]`.
    pub fn check_positive(&self, lo: f64, hi: f64) -> Result<()> {
        let (x, width) = self.min_width(lo, hi);
        if !(width > 0.0) {
            return Err(Error::NonPositiveWidth { x, width });
        }
        Ok(())
    }

    /// Largest `|φ'|` sampled on `[x, x + window]`.
    pub fn max_slope_beyond(&self, x: f64) -> (f64, f64) {
        let hi = if self.interval.is_unbounded() { x + TAIL_WINDOW } else { self.interval.b };
        let (mut xm, mut sm) = (x, self.deriv(x).abs());
        let n = 2000;
        for i in 1..=n {
            let t = x + (hi - x) * i as f64 / n as f64;
            let s = self.deriv(t).abs();
            if s > sm {
                xm = t;
                sm = s;
            }
        }
        (xm, sm)
    }

    /// Checks `|φ'| ≤ tol` beyond `x`.
    pub fn validate_tail(&self, x: f64, tol: f64) -> Result<()> {
        if tol.is_infinite() {
            return Ok(());
        }
        let (at, slope) = self.max_slope_beyond(x);
        if slope > tol {
            return Err(Error::TailNotFlat { x: at, slope, tol });
        }
        Ok(())
    }

    fn find_flat_tail(&self, from: f64, tol: f64) -> f64 {
        let mut hi = from;
        while self.max_slope_beyond(hi).1 > tol {
            hi += 0.5;
        }
        let mut lo = (hi - 0.5).max(from);
        if self.max_slope_beyond(lo).1 <= tol {
            return lo;
        }
        while hi - lo > 1e-6 {
            let mid = 0.5 * (lo + hi);
            if self.max_slope_beyond(mid).1 > tol {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

/// Condition imposed at an end of the domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EndCondition {
    Dirichlet,
    Neumann,
    /// Outgoing waves in a flat semi-infinite tail.
    Radiation,
}

/// Compact interval or a half line truncated at `x_trunc`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DomainKind {
    Compact { a: f64, b: f64 },
    HalfLineTruncated { a: f64, x_trunc: f64 },
}

/// A profile together with the interval and end conditions of a spectral problem.
#[derive(Clone, Debug)]
pub struct DomainSpec {
    pub profile: Profile,
    pub kind: DomainKind,
    pub left: EndCondition,
    pub right: EndCondition,
}

impl DomainSpec {
    pub fn new(profile: Profile, kind: DomainKind, left: EndCondition, right: EndCondition) -> Result<Self> {
        let (a, b) = match kind {
            DomainKind::Compact { a, b } => (a, b),
            DomainKind::HalfLineTruncated { a, x_trunc } => (a, x_trunc),
        };
        if !(a < b) || !b.is_finite() {
            return Err(Error::InvalidDomain("need a < b with b finite"));
        }
        let iv = profile.interval();
        if !iv.contains(a) || !iv.contains(b) {
            return Err(Error::InvalidDomain("domain is not inside the profile interval"));
        }
        if left == EndCondition::Radiation {
            return Err(Error::InvalidDomain("radiation is only allowed at the right end"));
        }
        if right == EndCondition::Radiation {
            if !matches!(kind, DomainKind::HalfLineTruncated { .. }) {
                return Err(Error::InvalidDomain("radiation needs a truncated half line"));
            }
            match profile.flat_tail_start() {
                Some(t) if b >= t => {}
                _ => profile.validate_tail(b, DEFAULT_TAIL_TOL)?,
            }
        }
        for (cond, x) in [(left, a), (right, b)] {
            if cond == EndCondition::Neumann {
                let slope = profile.deriv(x);
                if slope.abs() > DEFAULT_TAIL_TOL {
                    return Err(Error::TailNotFlat { x, slope, tol: DEFAULT_TAIL_TOL });
                }
            }
        }
        profile.check_positive(a, b)?;
        Ok(Self { profile, kind, left, right })
    }

    /// Dirichlet problem on `[a, b]`.
    pub fn trapped(profile: Profile, a: f64, b: f64) -> Result<Self> {
        Self::new(profile, DomainKind::Compact { a, b }, EndCondition::Dirichlet, EndCondition::Dirichlet)
    }

    /// Dirichlet at `a`, outgoing radiation at the truncation point `x_trunc`.
    pub fn radiating(profile: Profile, a: f64, x_trunc: f64) -> Result<Self> {
        Self::new(
            profile,
            DomainKind::HalfLineTruncated { a, x_trunc },
            EndCondition::Dirichlet,
            EndCondition::Radiation,
        )
    }

    pub fn endpoints(&self) -> (f64, f64) {
        match self.kind {
            DomainKind::Compact { a, b } => (a, b),
            DomainKind::HalfLineTruncated { a, x_trunc } => (a, x_trunc),
        }
    }

    /// Same domain with the right end moved to `b`.
    pub fn with_right_end(&self, b: f64) -> Result<Self> {
        let kind = match self.kind {
            DomainKind::Compact { a, .. } => DomainKind::Compact { a, b },
            DomainKind::HalfLineTruncated { a, .. } => DomainKind::HalfLineTruncated { a, x_trunc: b },
        };
        Self::new(self.profile.clone(), kind, self.left, self.right)
    }
}
