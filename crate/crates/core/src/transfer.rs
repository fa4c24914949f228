//! Propagation of the admissible boundary row space across the domain and the
//! characteristic determinant built from it.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::coupled_mode::{
    assemble_pqr, dirichlet_matrix, neumann_matrix, radiation_matrix, BetaTable, BoundaryMatrix,
};
use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, EndCondition};

type C64 = Complex64;

/// How the row space is advanced between re-orthonormalizations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// Integrates the linear system `ψ' = ψ J K` and re-orthonormalizes after each step.
    /// Step length is additionally capped so that `h · πN / φ` stays bounded.
    Linear,
    /// Integrates the projected system `ψ' = ψ J K (I − ψ*ψ)` and re-orthonormalizes
    /// after each step.
    Projected,
}

/// Adaptive step-size control.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: f64,
    pub max_step: f64,
    pub min_step: f64,
    /// Halves the maximum step where `|φ'/φ|` exceeds this value.
    pub steep_threshold: Option<f64>,
    /// Bound on `h · (πN/φ + √|λ|)` for [`Scheme::Linear`].
    pub growth_cap: f64,
    pub scheme: Scheme,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            initial_step: 1e-2,
            max_step: 0.25,
            min_step: 1e-12,
            steep_threshold: None,
            growth_cap: 3.0,
            scheme: Scheme::Linear,
        }
    }
}

impl StepControl {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !(positive(self.rtol) && positive(self.atol) && positive(self.initial_step)) {
            return Err(Error::InvalidParameter("tolerances and steps must be positive"));
        }
        if !(positive(self.min_step) && self.min_step <= self.max_step && positive(self.growth_cap)) {
            return Err(Error::InvalidParameter("step bounds are inconsistent"));
        }
        Ok(())
    }
}

/// Direction of integration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// From the left end to the right end.
    Forward,
    /// From the right end to the left end.
    Backward,
}

/// Orthonormal row space at the end of an integration, with diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferState {
    pub psi_tilde: DMatrix<C64>,
    pub at_x: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Largest `|ψ̃ψ̃* − I|` over the carried state at accepted steps.
    pub max_ortho_defect: f64,
    /// Largest `|ψψ* − I|` of the raw step result before re-orthonormalization.
    pub max_drift: f64,
}

/// Characteristic determinant at one spectral parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CharacteristicValue {
    pub lambda: C64,
    pub value: C64,
    pub n_modes: usize,
    pub max_ortho_defect: f64,
    pub steps: usize,
}

/// Integrator for a fixed domain and mode count.
#[derive(Clone, Debug)]
pub struct Transfer {
    spec: DomainSpec,
    n: usize,
    betas: BetaTable,
    control: StepControl,
    direction: Direction,
}

/// Row-major `rows × cols` complex buffer.
#[derive(Clone, Debug)]
pub(crate) struct Rows {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C64>,
}

impl Rows {
    fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    fn from_matrix(m: &DMatrix<C64>) -> Self {
        let mut r = Self::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                r.data[i * r.cols + j] = m[(i, j)];
            }
        }
        r
    }

    fn to_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Modified Gram–Schmidt on rows, applied twice, leaving a positive real diagonal in the
/// triangular factor. This makes the orthonormal representative continuous in its input.
pub(crate) fn orthonormalize(m: &mut Rows) -> Result<()> {
    let c = m.cols;
    for i in 0..m.rows {
        let norm0 = m.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm0 > 0.0) || !norm0.is_finite() {
            return Err(Error::RankDeficient);
        }
        for _ in 0..2 {
            for j in 0..i {
                let (head, tail) = m.data.split_at_mut(i * c);
                let rj = &head[j * c..(j + 1) * c];
                let ri = &mut tail[..c];
                let mut dot = C64::new(0.0, 0.0);
                for (a, b) in rj.iter().zip(ri.iter()) {
                    dot += a.conj() * b;
                }
                for (a, b) in rj.iter().zip(ri.iter_mut()) {
                    *b -= dot * a;
                }
            }
        }
        let ri = &mut m.data[i * c..(i + 1) * c];
        let norm = ri.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 1e-13 * norm0) {
            return Err(Error::RankDeficient);
        }
        let inv = 1.0 / norm;
        for z in ri.iter_mut() {
            *z *= inv;
        }
    }
    Ok(())
}

/// Orthonormalizes the rows of a dense matrix in place.
pub fn orthonormalize_rows(m: &mut DMatrix<C64>) -> Result<()> {
    let mut r = Rows::from_matrix(m);
    orthonormalize(&mut r)?;
    *m = r.to_matrix();
    Ok(())
}

fn ortho_defect(m: &Rows) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.rows {
        for j in 0..=i {
            let mut dot = C64::new(0.0, 0.0);
            for (a, b) in m.row(i).iter().zip(m.row(j)) {
                dot += a * b.conj();
            }
            if i == j {
                dot -= 1.0;
            }
            worst = worst.max(dot.norm());
        }
    }
    worst
}

struct Workspace {
    k: [Rows; 4],
    tmp: Rows,
    gram: Vec<C64>,
}

impl Transfer {
    pub fn new(spec: DomainSpec, n_modes: usize, control: StepControl) -> Result<Self> {
        control.validate()?;
        let betas = BetaTable::new(n_modes)?;
        Ok(Self { spec, n: n_modes, betas, control, direction: Direction::Forward })
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn n_modes(&self) -> usize {
        self.n
    }

    pub fn control(&self) -> &StepControl {
        &self.control
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// Boundary matrix imposed at `x` by `cond`.
    pub fn boundary_matrix(&self, cond: EndCondition, x: f64, lambda: C64) -> Result<BoundaryMatrix> {
        match cond {
            EndCondition::Dirichlet => Ok(dirichlet_matrix(self.n)),
            EndCondition::Neumann => Ok(neumann_matrix(self.n)),
            EndCondition::Radiation => {
                let c = assemble_pqr(x, lambda, self.n, &self.spec.profile, &self.betas)?;
                radiation_matrix(lambda, &c)
            }
        }
    }

    fn ends(&self) -> ((EndCondition, f64), (EndCondition, f64)) {
        let (a, b) = self.spec.endpoints();
        match self.direction {
            Direction::Forward => ((self.spec.left, a), (self.spec.right, b)),
            Direction::Backward => ((self.spec.right, b), (self.spec.left, a)),
        }
    }

    /// Propagates the starting boundary row space to the far end.
    pub fn integrate(&self, lambda: C64) -> Result<TransferState> {
        let ((c0, x0), (_, x1)) = self.ends();
        let start = self.boundary_matrix(c0, x0, lambda)?;
        self.integrate_from(lambda, &start.psi, x0, x1)
    }

    /// Propagates the row space of `psi0` from `from` to `to`.
    pub fn integrate_from(&self, lambda: C64, psi0: &DMatrix<C64>, from: f64, to: f64) -> Result<TransferState> {
        if psi0.nrows() != self.n || psi0.ncols() != 2 * self.n {
            return Err(Error::InvalidParameter("starting matrix must be N x 2N"));
        }
        let n = self.n;
        let ctl = &self.control;
        let mut psi = Rows::from_matrix(psi0);
        orthonormalize(&mut psi)?;
        let mut ws = Workspace {
            k: [Rows::zeros(n, 2 * n), Rows::zeros(n, 2 * n), Rows::zeros(n, 2 * n), Rows::zeros(n, 2 * n)],
            tmp: Rows::zeros(n, 2 * n),
            gram: vec![C64::new(0.0, 0.0); n * n],
        };
        let mut full = Rows::zeros(n, 2 * n);
        let mut half = Rows::zeros(n, 2 * n);
        let mut half2 = Rows::zeros(n, 2 * n);
        let dir = if to >= from { 1.0 } else { -1.0 };
        let mut x = from;
        let mut h = ctl.initial_step.min(ctl.max_step);
        let mut state = TransferState {
            psi_tilde: DMatrix::zeros(0, 0),
            at_x: from,
            accepted_steps: 0,
            rejected_steps: 0,
            max_ortho_defect: ortho_defect(&psi),
            max_drift: 0.0,
        };
        let lam_scale = lambda.norm().sqrt();
        while dir * (to - x) > 1e-14 * (1.0 + x.abs()) {
            let remaining = (to - x).abs();
            let mut hmax = ctl.max_step;
            if let Some(thr) = ctl.steep_threshold {
                let phi = self.spec.profile.eval(x);
                if (self.spec.profile.deriv(x) / phi).abs() > thr {
                    hmax *= 0.5;
                }
            }
            if ctl.scheme == Scheme::Linear {
                let xe = x + dir * h.min(remaining);
                let phi = self
                    .spec
                    .profile
                    .eval(x)
                    .min(self.spec.profile.eval(xe))
                    .min(self.spec.profile.eval(0.5 * (x + xe)));
                let mu = PI * n as f64 / phi + lam_scale;
                hmax = hmax.min(ctl.growth_cap / mu);
            }
            h = h.min(hmax);
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            let hs = dir * h;
            self.rhs(x, lambda, &psi, &mut ws.k[0], &mut ws.gram);
            self.rk4_step(x, hs, lambda, &psi, &mut full, &mut ws, true);
            self.rk4_step(x, 0.5 * hs, lambda, &psi, &mut half, &mut ws, true);
            self.rk4_step(x + 0.5 * hs, 0.5 * hs, lambda, &half, &mut half2, &mut ws, false);
            let drift = ortho_defect(&half2);
            orthonormalize(&mut full)?;
            orthonormalize(&mut half2)?;
            let err = full.data.iter().zip(&half2.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / 15.0;
            let ratio = err / (ctl.atol + ctl.rtol);
            if ratio <= 1.0 || h <= ctl.min_step {
                if ratio > 1.0 {
                    return Err(Error::IntegrationFailure { x, step: h });
                }
                for (h2, f) in half2.data.iter_mut().zip(&full.data) {
                    *h2 += (*h2 - f) / 15.0;
                }
                orthonormalize(&mut half2)?;
                core::mem::swap(&mut psi, &mut half2);
                x = if last { to } else { x + hs };
                state.accepted_steps += 1;
                state.max_drift = state.max_drift.max(drift);
                state.max_ortho_defect = state.max_ortho_defect.max(ortho_defect(&psi));
                let grow = if ratio > 0.0 { 0.9 * ratio.powf(-0.2) } else { 4.0 };
                h *= grow.clamp(0.2, 4.0);
            } else {
                state.rejected_steps += 1;
                h *= (0.9 * ratio.powf(-0.2)).clamp(0.1, 0.5);
                if h < ctl.min_step {
                    h = ctl.min_step;
                }
            }
            if !h.is_finite() {
                return Err(Error::IntegrationFailure { x, step: h });
            }
        }
        state.psi_tilde = psi.to_matrix();
        state.at_x = to;
        Ok(state)
    }

    /// Characteristic determinant `det [ψ̃(end); ψ_end]`.
    pub fn characteristic(&self, lambda: C64) -> Result<CharacteristicValue> {
        let (m, state) = self.stacked_matrix(lambda)?;
        let value = m.determinant();
        Ok(CharacteristicValue {
            lambda,
            value,
            n_modes: self.n,
            max_ortho_defect: state.max_ortho_defect,
            steps: state.accepted_steps,
        })
    }

    /// The `2N × 2N` matrix whose determinant is the characteristic function.
    pub fn stacked_matrix(&self, lambda: C64) -> Result<(DMatrix<C64>, TransferState)> {
        let (_, (c1, x1)) = self.ends();
        let state = self.integrate(lambda)?;
        let end = self.boundary_matrix(c1, x1, lambda)?;
        let n = self.n;
        let mut m = DMatrix::<C64>::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, 2 * n)).copy_from(&state.psi_tilde);
        m.view_mut((n, 0), (n, 2 * n)).copy_from(&end.psi);
        Ok((m, state))
    }

    #[allow(clippy::too_many_arguments)]
    fn rk4_step(&self, x: f64, h: f64, lambda: C64, y: &Rows, out: &mut Rows, ws: &mut Workspace, k1_ready: bool) {
        let [k1, k2, k3, k4] = &mut ws.k;
        if !k1_ready {
            self.rhs(x, lambda, y, k1, &mut ws.gram);
        }
        let tmp = &mut ws.tmp;
        axpy_into(tmp, y, 0.5 * h, k1);
        self.rhs(x + 0.5 * h, lambda, tmp, k2, &mut ws.gram);
        axpy_into(tmp, y, 0.5 * h, k2);
        self.rhs(x + 0.5 * h, lambda, tmp, k3, &mut ws.gram);
        axpy_into(tmp, y, h, k3);
        self.rhs(x + h, lambda, tmp, k4, &mut ws.gram);
        let w = h / 6.0;
        for i in 0..out.data.len() {
            out.data[i] = y.data[i] + (k1.data[i] + 2.0 * (k2.data[i] + k3.data[i]) + k4.data[i]) * w;
        }
    }

    /// `out = ψ J K`, optionally projected onto the complement of the row space.
    fn rhs(&self, x: f64, lambda: C64, psi: &Rows, out: &mut Rows, gram: &mut [C64]) {
        let n = self.n;
        let prof = &self.spec.profile;
        let phi = prof.eval(x);
        let dphi = prof.deriv(x);
        let c1 = dphi / phi;
        let c2 = dphi * dphi / phi;
        let inv_phi = 1.0 / phi;
        let t = &self.betas;
        let stride = 2 * n;
        for i in 0..n {
            let row = &psi.data[i * stride..(i + 1) * stride];
            let (a, b) = row.split_at(n);
            let o = &mut out.data[i * stride..(i + 1) * stride];
            let (oa, ob) = o.split_at_mut(n);
            for j in 0..n {
                oa[j] = b[j] * (lambda * phi - t.thresholds[j] * inv_phi);
                ob[j] = -a[j] * inv_phi;
            }
            if dphi != 0.0 {
                for k in 0..n {
                    let ak = a[k] * c1;
                    let bk = b[k] * c2;
                    let bq = b[k] * (-c1);
                    let qt = &t.q_hat_t[k * n..(k + 1) * n];
                    let cc = &t.coupling[k * n..(k + 1) * n];
                    let qh = &t.q_hat[k * n..(k + 1) * n];
                    for j in 0..n {
                        oa[j] += ak * qt[j] + bk * cc[j];
                        ob[j] += bq * qh[j];
                    }
                }
            }
        }
        if self.control.scheme == Scheme::Projected {
            for i in 0..n {
                for j in 0..n {
                    let mut g = C64::new(0.0, 0.0);
                    for (w, p) in out.row(i).iter().zip(psi.row(j)) {
                        g += w * p.conj();
                    }
                    gram[i * n + j] = g;
                }
            }
            for i in 0..n {
                for j in 0..n {
                    let g = gram[i * n + j];
                    let (src, dst) = (psi.row(j), &mut out.data[i * stride..(i + 1) * stride]);
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d -= g * s;
                    }
                }
            }
        }
    }
}

fn axpy_into(out: &mut Rows, y: &Rows, h: f64, k: &Rows) {
    for ((o, a), b) in out.data.iter_mut().zip(&y.data).zip(&k.data) {
        *o = a + b * h;
    }
}

/// Propagates the left boundary row space of `spec` to its right end.
pub fn transfer_integrate(
    lambda: C64,
    spec: &DomainSpec,
    n_modes: usize,
    control: StepControl,
) -> Result<TransferState> {
    Transfer::new(spec.clone(), n_modes, control)?.integrate(lambda)
}

/// Characteristic determinant with default step control.
pub fn characteristic_det(lambda: C64, spec: &DomainSpec, n_modes: usize) -> Result<CharacteristicValue> {
    Transfer::new(spec.clone(), n_modes, StepControl::default())?.characteristic(lambda)
}
