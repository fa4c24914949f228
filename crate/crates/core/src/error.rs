use num_complex::Complex64;
use thiserror::Error;

use crate::spectral::Contour;

/// Errors raised by the solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),

    #[error("profile width is not positive: {width} at x = {x}")]
    NonPositiveWidth { x: f64, width: f64 },

    #[error("alpha = {alpha} is not below the critical value {critical}")]
    AlphaTooLarge { alpha: f64, critical: f64 },

    #[error("invalid domain: {0}")]
    InvalidDomain(&'static str),

    #[error("profile slope {slope} at x = {x} exceeds the flat-tail tolerance {tol}")]
    TailNotFlat { x: f64, slope: f64, tol: f64 },

    #[error("lambda = {lambda} lies on the branch cut of the transverse exponent of mode {mode}")]
    BranchAmbiguity { lambda: Complex64, mode: usize },

    #[error("step size {step} fell below the minimum at x = {x}")]
    IntegrationFailure { x: f64, step: f64 },

    #[error("row space collapsed during re-orthonormalization")]
    RankDeficient,

    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),

    #[error("iterate {iterate} left the admissible interval [{lo}, {hi}]")]
    DivergedFromSeed { iterate: f64, lo: f64, hi: f64 },

    #[error("no sign change of the characteristic function near the seed")]
    NoBracket,

    #[error("characteristic function vanishes on the contour near lambda = {0}")]
    ZeroOnContour(Complex64),

    #[error("winding number is not integral (quality {quality})")]
    NonIntegerWinding { quality: f64 },

    #[error("contour passes within {distance} of the threshold (pi k)^2 for k = {mode}")]
    NearThreshold { mode: usize, distance: f64 },

    #[error("root lost while shrinking contours; last good contour {last:?}")]
    LostRoot { last: Contour },

    #[error("contour encloses {0} roots")]
    MultipleRoots(i64),

    #[error("scattering system is singular")]
    SingularSystem,

    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
