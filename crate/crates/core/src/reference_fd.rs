//! Two-dimensional finite-difference reference for the lowest Dirichlet eigenvalue of the
//! region `{x0 < x < x1, 0 < y < φ(x)}`, computed on the rectangle `η = y/φ(x) ∈ (0, 1)`.
//!
//! In the mapped variables the energy is `∫∫ ∇v · A ∇v dx dη` with
//! `A = [[φ, −φ'η], [−φ'η, (1 + (φ'η)²)/φ]]` and the mass is `∫∫ φ v² dx dη`. Each cell
//! contributes one quarter of its area at each corner, where the gradient is formed
//! from the two cell edges meeting at that corner.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::{bump_peak, Profile};

/// Fewest cells allowed in either direction, giving at least 49 interior nodes.
pub const MIN_CELLS: usize = 8;

/// Tensor grid with node abscissae `x` and mapped ordinates `η` covering `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub x: Vec<f64>,
    pub eta: Vec<f64>,
}

impl Grid {
    pub fn new(x: Vec<f64>, eta: Vec<f64>) -> Result<Self> {
        if x.len() < MIN_CELLS + 1 || eta.len() < MIN_CELLS + 1 {
            return Err(Error::InvalidGrid("need at least eight cells in each direction"));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) || eta.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid("node coordinates must increase strictly"));
        }
        if eta[0] != 0.0 || eta[eta.len() - 1] != 1.0 {
            return Err(Error::InvalidGrid("eta must run from 0 to 1"));
        }
        Ok(Self { x, eta })
    }

    /// `nx × ny` equal cells on `[x0, x1] × [0, 1]`.
    pub fn uniform(x0: f64, x1: f64, nx: usize, ny: usize) -> Result<Self> {
        if nx < MIN_CELLS || ny < MIN_CELLS || !(x1 > x0) {
            return Err(Error::InvalidGrid("need x0 < x1 and at least eight cells in each direction"));
        }
        let x = (0..=nx).map(|i| x0 + (x1 - x0) * i as f64 / nx as f64).collect();
        let eta = (0..=ny).map(|j| j as f64 / ny as f64).collect();
        Self::new(x, eta)
    }

    pub fn nx(&self) -> usize {
        self.x.len() - 1
    }

    pub fn ny(&self) -> usize {
        self.eta.len() - 1
    }

    /// The grid with every cell split in two in both directions.
    pub fn refined(&self) -> Self {
        let split = |v: &[f64]| {
            let mut out = Vec::with_capacity(2 * v.len() - 1);
            for w in v.windows(2) {
                out.push(w[0]);
                out.push(0.5 * (w[0] + w[1]));
            }
            out.push(v[v.len() - 1]);
            out
        };
        Self { x: split(&self.x), eta: split(&self.eta) }
    }
}

/// Stiffness (symmetric band, lower part stored row by row) and lumped mass for the
/// interior nodes, ordered `(i − 1)(ny − 1) + (j − 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    pub n: usize,
    pub bandwidth: usize,
    /// `band[i · (bandwidth + 1) + (j + bandwidth − i)] = K[i][j]` for `i − bandwidth ≤ j ≤ i`.
    pub band: Vec<f64>,
    pub mass: Vec<f64>,
    pub nx: usize,
    pub ny: usize,
}

impl SparseOperator {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bandwidth {
            return 0.0;
        }
        self.band[i * (self.bandwidth + 1) + (j + self.bandwidth - i)]
    }

    /// `K v` for interior-node values `v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        let w = self.bandwidth + 1;
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bandwidth);
            for j in lo..=i {
                let a = self.band[i * w + (j + self.bandwidth - i)];
                if a != 0.0 {
                    out[i] += a * v[j];
                    if j != i {
                        out[j] += a * v[i];
                    }
                }
            }
        }
        out
    }

    /// `vᵀ K v`.
    pub fn energy(&self, v: &[f64]) -> f64 {
        self.apply(v).iter().zip(v).map(|(a, b)| a * b).sum()
    }

    /// `vᵀ M v`.
    pub fn mass_norm(&self, v: &[f64]) -> f64 {
        self.mass.iter().zip(v).map(|(m, b)| m * b * b).sum()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        (i - 1) * (self.ny - 1) + (j - 1)
    }
}

/// Assembles the stiffness and mass on `grid` for the profile `φ`.
pub fn assemble_fd(profile: &Profile, grid: &Grid) -> Result<SparseOperator> {
    let (nx, ny) = (grid.nx(), grid.ny());
    for &x in &grid.x {
        let p = profile.eval(x);
        if !(p > 0.0) {
            return Err(Error::NonPositiveWidth { x, width: p });
        }
    }
    let n = (nx - 1) * (ny - 1);
    let bw = ny;
    let w = bw + 1;
    let mut band = vec![0.0; n * w];
    let mut mass = vec![0.0; n];
    let node = |i: usize, j: usize| -> Option<usize> {
        if i == 0 || j == 0 || i == nx || j == ny {
            None
        } else {
            Some((i - 1) * (ny - 1) + (j - 1))
        }
    };
    let phis: Vec<f64> = grid.x.iter().map(|&x| profile.eval(x)).collect();
    let dphis: Vec<f64> = grid.x.iter().map(|&x| profile.deriv(x)).collect();
    for i in 0..nx {
        let hx = grid.x[i + 1] - grid.x[i];
        for j in 0..ny {
            let hy = grid.eta[j + 1] - grid.eta[j];
            let wt = 0.25 * hx * hy;
            for (ci, cj) in [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)] {
                let (p, d, eta) = (phis[ci], dphis[ci], grid.eta[cj]);
                let s = d * eta;
                let a = [[p, -s], [-s, (1.0 + s * s) / p]];
                let g: [[(usize, usize, f64); 2]; 2] =
                    [[(i + 1, cj, 1.0 / hx), (i, cj, -1.0 / hx)], [(ci, j + 1, 1.0 / hy), (ci, j, -1.0 / hy)]];
                for s1 in 0..2 {
                    for s2 in 0..2 {
                        let c = wt * a[s1][s2];
                        for &(i1, j1, v1) in &g[s1] {
                            let Some(r) = node(i1, j1) else { continue };
                            for &(i2, j2, v2) in &g[s2] {
                                let Some(q) = node(i2, j2) else { continue };
                                if r >= q {
                                    band[r * w + (q + bw - r)] += c * v1 * v2;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    for i in 1..nx {
        let hx = 0.5 * (grid.x[i + 1] - grid.x[i - 1]);
        for j in 1..ny {
            let hy = 0.5 * (grid.eta[j + 1] - grid.eta[j - 1]);
            mass[(i - 1) * (ny - 1) + (j - 1)] = phis[i] * hx * hy;
        }
    }
    Ok(SparseOperator { n, bandwidth: bw, band, mass, nx, ny })
}

struct BandCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    fn factor(n: usize, bw: usize, band: &[f64]) -> Result<Self> {
        let w = bw + 1;
        let mut l = band.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let klo = lo.max(j.saturating_sub(bw));
                let mut s = l[i * w + (j + bw - i)];
                let (ri, rj) = (i * w + bw - i, j * w + bw - j);
                for k in klo..j {
                    s -= l[ri + k] * l[rj + k];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::InvalidGrid("stiffness matrix is not positive definite"));
                    }
                    l[i * w + bw] = s.sqrt();
                } else {
                    l[i * w + (j + bw - i)] = s / l[j * w + bw];
                }
            }
        }
        Ok(Self { n, bw, l })
    }

    fn solve(&self, b: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut s = b[i];
            for k in lo..i {
                s -= self.l[i * w + (k + bw - i)] * b[k];
            }
            b[i] = s / self.l[i * w + bw];
        }
        for i in (0..n).rev() {
            let x = b[i] / self.l[i * w + bw];
            b[i] = x;
            let lo = i.saturating_sub(bw);
            for k in lo..i {
                b[k] -= self.l[i * w + (k + bw - i)] * x;
            }
        }
    }
}

/// The `k` smallest eigenvalues of `K v = λ M v`, ascending, by inverse subspace iteration
/// with Rayleigh–Ritz projection.
pub fn smallest_eigenvalues(op: &SparseOperator, k: usize) -> Result<Vec<f64>> {
    if k == 0 || k > op.n {
        return Err(Error::InvalidParameter("requested eigenvalue count out of range"));
    }
    let n = op.n;
    let bw = op.bandwidth;
    let w = bw + 1;
    let scale: Vec<f64> = op.mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    let mut b = op.band.clone();
    for i in 0..n {
        for j in i.saturating_sub(bw)..=i {
            b[i * w + (j + bw - i)] *= scale[i] * scale[j];
        }
    }
    let scaled = SparseOperator { band: b, mass: vec![1.0; n], ..op.clone() };
    let chol = BandCholesky::factor(n, bw, &scaled.band)?;
    let p = (k + 5).min(n);
    let mut seed: u64 = 0x9e37_79b9_7f4a_7c15;
    let mut x = DMatrix::<f64>::from_fn(n, p, |_, _| {
        seed ^= seed << 13;
        seed ^= seed >> 7;
        seed ^= seed << 17;
        (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    });
    let mut prev = vec![f64::INFINITY; k];
    for _ in 0..500 {
        for c in 0..p {
            let mut col: Vec<f64> = x.column(c).iter().copied().collect();
            chol.solve(&mut col);
            x.column_mut(c).copy_from_slice(&col);
        }
        let q = x.clone().qr().q();
        let mut bq = DMatrix::<f64>::zeros(n, p);
        for c in 0..p {
            let col: Vec<f64> = q.column(c).iter().copied().collect();
            bq.column_mut(c).copy_from_slice(&scaled.apply(&col));
        }
        let h = q.transpose() * &bq;
        let h = 0.5 * (&h + h.transpose());
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap_or(core::cmp::Ordering::Equal)
        });
        let mut v = DMatrix::<f64>::zeros(p, p);
        for (dst, &src) in order.iter().enumerate() {
            v.column_mut(dst).copy_from(&eig.eigenvectors.column(src));
        }
        x = q * v;
        let vals: Vec<f64> = order.iter().take(k).map(|&i| eig.eigenvalues[i]).collect();
        let done = vals.iter().zip(&prev).all(|(a, b)| ((a - b) / a).abs() < 1e-10);
        prev = vals;
        if done {
            return Ok(prev);
        }
    }
    Err(Error::NoConvergence(500))
}

/// One refinement level of a finite-difference sequence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdLevel {
    pub nx: usize,
    pub ny: usize,
    pub lambda: f64,
}

/// Lowest eigenvalue on successively refined grids with its Richardson extrapolation.
#[derive(Clone, Debug, PartialEq)]
pub struct FdEstimate {
    pub levels: Vec<FdLevel>,
    /// `λ_{4n} + (λ_{4n} − λ_{2n})/3` from the last two levels.
    pub richardson: f64,
    /// Difference between the extrapolations from the last and the previous pair of levels.
    pub error_estimate: f64,
}

impl FdEstimate {
    pub fn omega(&self) -> f64 {
        self.richardson.sqrt()
    }
}

/// Extrapolates a second-order sequence on grids refined by factors of two.
pub fn richardson(coarse: f64, fine: f64) -> f64 {
    fine + (fine - coarse) / 3.0
}

/// Lowest eigenvalue on each grid of `grids` (each a refinement of the previous).
pub fn fd_sequence(profile: &Profile, grids: &[Grid]) -> Result<FdEstimate> {
    if grids.len() < 3 {
        return Err(Error::InvalidGrid("extrapolation needs three levels"));
    }
    let mut levels = Vec::with_capacity(grids.len());
    for g in grids {
        let op = assemble_fd(profile, g)?;
        let l = smallest_eigenvalues(&op, 1)?[0];
        levels.push(FdLevel { nx: g.nx(), ny: g.ny(), lambda: l });
    }
    let m = levels.len();
    let r2 = richardson(levels[m - 2].lambda, levels[m - 1].lambda);
    let r1 = richardson(levels[m - 3].lambda, levels[m - 2].lambda);
    Ok(FdEstimate { levels, richardson: r2, error_estimate: (r2 - r1).abs() })
}

/// Uniform grids on `[x0, x1]` starting at `nx × ny` cells and doubling `levels − 1` times.
pub fn fd_reference(profile: &Profile, x0: f64, x1: f64, nx: usize, ny: usize, levels: usize) -> Result<FdEstimate> {
    let mut grids = vec![Grid::uniform(x0, x1, nx, ny)?];
    for _ in 1..levels {
        let g = grids[grids.len() - 1].refined();
        grids.push(g);
    }
    fd_sequence(profile, &grids)
}

/// Point `x_t < x_c` where the pinched profile `1 − α* bump_sum` drops to `cut`, with `x_c`
/// the pinch location.
pub fn cusp_truncation(gamma: f64, cut: f64) -> Result<f64> {
    if !(cut > 0.0 && cut < 1.0) {
        return Err(Error::InvalidParameter("cut must lie in (0, 1)"));
    }
    let xc = bump_peak(gamma);
    let astar = crate::geometry::alpha_critical(gamma);
    let f = |x: f64| 1.0 - astar * crate::geometry::bump_sum(x, gamma) - cut;
    if f(0.0) <= 0.0 {
        return Err(Error::InvalidParameter("profile is below the cut at the origin"));
    }
    let (mut lo, mut hi) = (0.0, xc);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Ratio between neighbouring cell widths in the graded part of a cusp grid.
pub const CUSP_GRADING: f64 = 0.8;

/// Grids on `[0, x_t]` for the pinched profile, doubling `levels − 1` times from `base`
/// cells in `x` and `base / 2` in `η`. The first half of the coarse `x` cells is uniform;
/// the second half shrinks geometrically by [`CUSP_GRADING`] towards `x_t`.
pub fn cusp_grids(x_t: f64, base: usize, levels: usize) -> Result<Vec<Grid>> {
    if !(x_t > 0.0) || base < MIN_CELLS {
        return Err(Error::InvalidGrid("cusp grids need x_t > 0 and at least 8 cells"));
    }
    let graded = base / 2;
    let widths: Vec<f64> = (0..base).map(|i| CUSP_GRADING.powi(i.saturating_sub(base - graded) as i32)).collect();
    let total: f64 = widths.iter().sum();
    let mut x = Vec::with_capacity(base + 1);
    x.push(0.0);
    let mut acc = 0.0;
    for w in &widths[..base - 1] {
        acc += w;
        x.push(x_t * acc / total);
    }
    x.push(x_t);
    let ny = (base / 2).max(MIN_CELLS);
    let eta = (0..=ny).map(|j| j as f64 / ny as f64).collect();
    let mut grids = vec![Grid::new(x, eta)?];
    for _ in 1..levels {
        let g = grids[grids.len() - 1].refined();
        grids.push(g);
    }
    Ok(grids)
}

/// Extrapolated lowest eigenvalue of the region under the pinched profile `1 − α* bump_sum`
/// between `x = 0` and the right end of `grids`, which must lie short of the pinch point.
pub fn cusp_limit_estimate(gamma: f64, grids: &[Grid]) -> Result<FdEstimate> {
    let x_end = match grids.first() {
        Some(g) => g.x[g.x.len() - 1],
        None => return Err(Error::InvalidGrid("extrapolation needs three levels")),
    };
    if grids.iter().any(|g| g.x[0] != 0.0 || g.x[g.x.len() - 1] != x_end) {
        return Err(Error::InvalidGrid("all cusp grids must cover the same interval from 0"));
    }
    let profile = Profile::pinched(gamma, x_end)?;
    fd_sequence(&profile, grids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Interval;
    use core::f64::consts::PI;

    #[test]
    fn band_cholesky_solves() {
        let prof = Profile::uniform(Interval::new(0.0, 1.0).unwrap());
        let g = Grid::uniform(0.0, 1.0, 9, 8).unwrap();
        let op = assemble_fd(&prof, &g).unwrap();
        let ch = BandCholesky::factor(op.n, op.bandwidth, &op.band).unwrap();
        let x: Vec<f64> = (0..op.n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut b = op.apply(&x);
        ch.solve(&mut b);
        for (a, e) in b.iter().zip(&x) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_strip_matches_discrete_laplacian() {
        let prof = Profile::uniform(Interval::new(0.0, 1.0).unwrap());
        let (nx, ny) = (10, 8);
        let g = Grid::uniform(0.0, 1.0, nx, ny).unwrap();
        let op = assemble_fd(&prof, &g).unwrap();
        let l = smallest_eigenvalues(&op, 2).unwrap();
        let (hx, hy) = (1.0 / nx as f64, 1.0 / ny as f64);
        let lap = |p: usize, q: usize| {
            4.0 / (hx * hx) * (PI * p as f64 * hx / 2.0).sin().powi(2)
                + 4.0 / (hy * hy) * (PI * q as f64 * hy / 2.0).sin().powi(2)
        };
        assert!((l[0] - lap(1, 1)).abs() < 1e-9 * l[0]);
        assert!((l[1] - lap(2, 1).min(lap(1, 2))).abs() < 1e-9 * l[1]);
    }
}
