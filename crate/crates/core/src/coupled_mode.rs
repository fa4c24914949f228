//! Transverse-mode coupling coefficients and the first-order Hamiltonian system they generate.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::Profile;

/// Coupling of mode `k` to the `y`-derivative of mode `r` (both 1-based).
pub fn beta12(k: usize, r: usize) -> f64 {
    let (kf, rf) = (k as f64, r as f64);
    if k == r {
        -1.0 / (2.0 * PI * kf)
    } else {
        sign(k + r) * 2.0 * kf / (PI * (rf * rf - kf * kf))
    }
}

/// Coupling of the `y`-weighted products of modes `k` and `r` (both 1-based).
pub fn beta22(k: usize, r: usize) -> f64 {
    let (kf, rf) = (k as f64, r as f64);
    if k == r {
        1.0 / 3.0 + 1.0 / (2.0 * PI * PI * kf * kf)
    } else {
        let d = kf * kf - rf * rf;
        sign(k + r) * 4.0 * (kf * kf + rf * rf) / (PI * PI * d * d)
    }
}

fn sign(m: usize) -> f64 {
    if m.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Coupling coefficients for `N` modes together with the derived constant matrices used
/// by the transfer right-hand side. All matrices are row-major `N × N`.
#[derive(Clone, Debug)]
pub struct BetaTable {
    n: usize,
    b12: Vec<f64>,
    b22: Vec<f64>,
    /// `Q̂_kr = −πk β12(r, k)`, so that `Q = φ' Q̂`.
    pub(crate) q_hat: Vec<f64>,
    /// `Q̂ᵀ`.
    pub(crate) q_hat_t: Vec<f64>,
    /// `Q̂ Q̂ᵀ − (π² k r β22(k, r))`.
    pub(crate) coupling: Vec<f64>,
    /// `(πk)²`.
    pub(crate) thresholds: Vec<f64>,
}

impl BetaTable {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("at least one mode is required"));
        }
        let mut b12 = vec![0.0; n * n];
        let mut b22 = vec![0.0; n * n];
        let mut q_hat = vec![0.0; n * n];
        let mut q_hat_t = vec![0.0; n * n];
        for k in 0..n {
            for r in 0..n {
                b12[k * n + r] = beta12(k + 1, r + 1);
                b22[k * n + r] = beta22(k + 1, r + 1);
            }
        }
        for k in 0..n {
            for r in 0..n {
                let v = -PI * (k + 1) as f64 * b12[r * n + k];
                q_hat[k * n + r] = v;
                q_hat_t[r * n + k] = v;
            }
        }
        let mut coupling = vec![0.0; n * n];
        for k in 0..n {
            for r in 0..n {
                let qq: f64 = (0..n).map(|m| q_hat[k * n + m] * q_hat[r * n + m]).sum();
                let rb = PI * PI * ((k + 1) * (r + 1)) as f64 * b22[k * n + r];
                coupling[k * n + r] = qq - rb;
            }
        }
        let thresholds = (1..=n).map(|k| (PI * k as f64).powi(2)).collect();
        Ok(Self { n, b12, b22, q_hat, q_hat_t, coupling, thresholds })
    }

    pub fn n_modes(&self) -> usize {
        self.n
    }

    /// `β12(k, r)` for 1-based indices.
    pub fn beta12(&self, k: usize, r: usize) -> f64 {
        self.b12[(k - 1) * self.n + (r - 1)]
    }

    /// `β22(k, r)` for 1-based indices.
    pub fn beta22(&self, k: usize, r: usize) -> f64 {
        self.b22[(k - 1) * self.n + (r - 1)]
    }
}

/// The matrices `P`, `Q`, `R` of the coupled-mode system at one abscissa.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemCoefficients {
    pub at_x: f64,
    pub lambda: Complex64,
    pub p: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<Complex64>,
}

impl SystemCoefficients {
    pub fn n_modes(&self) -> usize {
        self.p.nrows()
    }

    /// The scalar `φ(x)` carried on the diagonal of `P`.
    pub fn width(&self) -> f64 {
        self.p[(0, 0)]
    }
}

/// Evaluates `P`, `Q`, `R` at `x` for the first `n_modes` modes.
pub fn assemble_pqr(
    x: f64,
    lambda: Complex64,
    n_modes: usize,
    profile: &Profile,
    betas: &BetaTable,
) -> Result<SystemCoefficients> {
    if n_modes == 0 || n_modes > betas.n_modes() {
        return Err(Error::InvalidParameter("mode count exceeds the coefficient table"));
    }
    let phi = profile.eval(x);
    if !(phi > 0.0) {
        return Err(Error::NonPositiveWidth { x, width: phi });
    }
    let dphi = profile.deriv(x);
    let n = n_modes;
    let p = DMatrix::from_diagonal_element(n, n, phi);
    let q = DMatrix::from_fn(n, n, |k, r| -PI * (k + 1) as f64 * betas.beta12(r + 1, k + 1) * dphi);
    let r = DMatrix::from_fn(n, n, |k, r| {
        let coupling = PI * PI * ((k + 1) * (r + 1)) as f64 * betas.beta22(k + 1, r + 1) * dphi * dphi / phi;
        let mut v = Complex64::new(coupling, 0.0);
        if k == r {
            v += Complex64::new((PI * (k + 1) as f64).powi(2) / phi, 0.0) - lambda * phi;
        }
        v
    });
    Ok(SystemCoefficients { at_x: x, lambda, p, q, r })
}

/// The symmetric matrix `K` of the Hamiltonian form `ξ' = J K ξ`.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianMatrix {
    pub k: DMatrix<Complex64>,
}

/// `K = [[−R + Q P⁻¹ Qᵀ, −Q P⁻¹], [−P⁻¹ Qᵀ, P⁻¹]]`.
pub fn assemble_k(coeffs: &SystemCoefficients) -> Result<HamiltonianMatrix> {
    let n = coeffs.n_modes();
    let p_inv = coeffs.p.clone().try_inverse().ok_or(Error::InvalidParameter("P is singular"))?;
    let qp = &coeffs.q * &p_inv;
    let qpq = &qp * coeffs.q.transpose();
    let pq = &p_inv * coeffs.q.transpose();
    let mut k = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            k[(i, j)] = -coeffs.r[(i, j)] + qpq[(i, j)];
            k[(i, n + j)] = Complex64::from(-qp[(i, j)]);
            k[(n + i, j)] = Complex64::from(-pq[(i, j)]);
            k[(n + i, n + j)] = Complex64::from(p_inv[(i, j)]);
        }
    }
    Ok(HamiltonianMatrix { k })
}

/// `J = [[0, −I], [I, 0]]`.
pub fn symplectic_j(n: usize) -> DMatrix<Complex64> {
    let mut j = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = Complex64::new(-1.0, 0.0);
        j[(n + i, i)] = Complex64::new(1.0, 0.0);
    }
    j
}

/// Kind of boundary row space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
    Radiation(Complex64),
}

/// An `N × 2N` matrix whose rows annihilate admissible `(h, h')` pairs at an end point.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryMatrix {
    pub psi: DMatrix<Complex64>,
    pub kind: BoundaryKind,
}

/// `(I, 0)`.
pub fn dirichlet_matrix(n: usize) -> BoundaryMatrix {
    let mut psi = DMatrix::<Complex64>::zeros(n, 2 * n);
    for i in 0..n {
        psi[(i, i)] = Complex64::new(1.0, 0.0);
    }
    BoundaryMatrix { psi, kind: BoundaryKind::Dirichlet }
}

/// `(0, I)`.
pub fn neumann_matrix(n: usize) -> BoundaryMatrix {
    let mut psi = DMatrix::<Complex64>::zeros(n, 2 * n);
    for i in 0..n {
        psi[(i, n + i)] = Complex64::new(1.0, 0.0);
    }
    BoundaryMatrix { psi, kind: BoundaryKind::Neumann }
}

/// Exponent `t_k` of the tail solution `e^{t_k x}` of mode `k` (1-based).
///
/// Mode 1 uses `t_1 = i √(λ − π²)`, analytic off the ray `λ < π²` and equal to
/// `−√(π² − λ)` on it. Higher modes use `t_k = −√((πk)² − λ)` on the principal branch,
/// whose cut is the real ray `λ > (πk)²`.
pub fn transverse_exponent(k: usize, lambda: Complex64) -> Result<Complex64> {
    if k == 0 {
        return Err(Error::InvalidParameter("modes are numbered from 1"));
    }
    let thr = (PI * k as f64).powi(2);
    let z = lambda - thr;
    if z.norm() == 0.0 {
        return Err(Error::BranchAmbiguity { lambda, mode: k });
    }
    if k == 1 {
        if z.im == 0.0 && z.re < 0.0 {
            return Ok(Complex64::new(-(-z.re).sqrt(), 0.0));
        }
        Ok(Complex64::i() * z.sqrt())
    } else {
        if z.im == 0.0 && z.re > 0.0 {
            return Err(Error::BranchAmbiguity { lambda, mode: k });
        }
        Ok(-(-z).sqrt())
    }
}

/// Outgoing-wave boundary matrix `(T − P⁻¹Qᵀ, P⁻¹)` with `T = diag(t_1, −t_2, …, −t_N)`.
pub fn radiation_matrix(lambda: Complex64, coeffs: &SystemCoefficients) -> Result<BoundaryMatrix> {
    let n = coeffs.n_modes();
    let phi = coeffs.width();
    let mut psi = DMatrix::<Complex64>::zeros(n, 2 * n);
    for k in 0..n {
        let t = transverse_exponent(k + 1, lambda)?;
        psi[(k, k)] = if k == 0 { t } else { -t };
        for r in 0..n {
            psi[(k, r)] -= Complex64::from(coeffs.q[(r, k)] / phi);
        }
        psi[(k, n + k)] = Complex64::new(1.0 / phi, 0.0);
    }
    let t1 = psi[(0, 0)] + Complex64::from(coeffs.q[(0, 0)] / phi);
    Ok(BoundaryMatrix { psi, kind: BoundaryKind::Radiation(t1) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Interval, Profile};

    #[test]
    fn diagonal_values() {
        assert!((beta12(1, 1) + 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!((beta22(2, 2) - (1.0 / 3.0 + 1.0 / (8.0 * PI * PI))).abs() < 1e-15);
    }

    #[test]
    fn table_matches_free_functions() {
        let t = BetaTable::new(5).unwrap();
        for k in 1..=5 {
            for r in 1..=5 {
                assert_eq!(t.beta12(k, r), beta12(k, r));
                assert_eq!(t.beta22(k, r), beta22(k, r));
            }
        }
        assert!(BetaTable::new(0).is_err());
    }

    #[test]
    fn uniform_strip_decouples() {
        let prof = Profile::uniform(Interval::new(0.0, 1.0).unwrap());
        let t = BetaTable::new(3).unwrap();
        let c = assemble_pqr(0.5, Complex64::new(2.0, 0.0), 3, &prof, &t).unwrap();
        assert!(c.q.iter().all(|v| *v == 0.0));
        for k in 0..3 {
            let expect = (PI * (k + 1) as f64).powi(2) - 2.0;
            assert!((c.r[(k, k)].re - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn exponent_branches() {
        let t = transverse_exponent(1, Complex64::new(0.0, 0.0)).unwrap();
        assert!((t - Complex64::new(-PI, 0.0)).norm() < 1e-14);
        let t = transverse_exponent(1, Complex64::new(20.0, 0.0)).unwrap();
        assert!(t.re.abs() < 1e-15 && t.im > 0.0);
        let above = transverse_exponent(1, Complex64::new(5.0, 1e-9)).unwrap();
        let below = transverse_exponent(1, Complex64::new(5.0, -1e-9)).unwrap();
        assert!((above - below).norm() > 1.0);
        let t2 = transverse_exponent(2, Complex64::new(0.0, 0.0)).unwrap();
        assert!((t2 + 2.0 * PI).norm() < 1e-14);
        assert!(matches!(
            transverse_exponent(2, Complex64::new(50.0, 0.0)),
            Err(Error::BranchAmbiguity { mode: 2, .. })
        ));
        assert!(matches!(
            transverse_exponent(1, Complex64::new(PI * PI, 0.0)),
            Err(Error::BranchAmbiguity { mode: 1, .. })
        ));
    }

    #[test]
    fn radiation_at_zero_lambda() {
        let prof = Profile::uniform(Interval::half_line(0.0).unwrap());
        let t = BetaTable::new(3).unwrap();
        let c = assemble_pqr(1.0, Complex64::new(0.0, 0.0), 3, &prof, &t).unwrap();
        let b = radiation_matrix(Complex64::new(0.0, 0.0), &c).unwrap();
        let expect = [-PI, 2.0 * PI, 3.0 * PI];
        for k in 0..3 {
            assert!((b.psi[(k, k)].re - expect[k]).abs() < 1e-12);
            assert_eq!(b.psi[(k, 3 + k)], Complex64::new(1.0, 0.0));
        }
    }
}
