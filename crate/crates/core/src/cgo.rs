//! Complex geometrical optics (CGO) solutions of the matrix Schrödinger
//! equation.
//!
//! A CGO solution has the form `Z = e^{i zeta . x} (L + R)` with a complex
//! frequency `zeta` satisfying `zeta . zeta = k^2`, a constant lead vector
//! `L`, and a remainder `R` small as `|zeta|` grows. Substituting into
//! `(-Delta + Q + k^2) Z = 0` and conjugating away the exponential leaves
//!
//! ```text
//!   (-Delta - 2 i zeta . grad) R = -(Q + k^2 I) (L + R),
//! ```
//!
//! solved here as a fixed point on a periodic work box: the left-hand side
//! inverts to the Fourier multiplier `1 / (|xi|^2 + 2 zeta . xi)`. A
//! half-lattice shift `R = e^{i delta . x} R-tilde` with
//! `delta = (pi / L1, 0, 0)` moves the evaluation points off the zero set of
//! the symbol; the box length additionally carries a `(1 + 1/127)`
//! perturbation so no lattice point is resonant.
//!
//! Frequencies come in pairs `zeta_1, zeta_2` built from a spatial frequency
//! `xi` and a large parameter `tau` so that `zeta_1 - conj(zeta_2) = -xi`:
//! pairing a principal CGO against an adjoint one isolates the Fourier mode
//! `e^{-i xi . x}` of the potential difference.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coeff::CoeffFn;
use crate::diff;
use crate::fft::{angular_freq, fft3, ifft3};
use crate::grid::{AugmentedField, Grid3, C64};
use crate::reduction::{matvec8, PotentialMatrix, Potentials, ReductionError};

/// Errors raised by the CGO layer.
#[derive(Debug, Error)]
pub enum CgoError {
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    /// `xi` is zero or parallel to `e3`, so the frame `(eta1, eta2)` is
    /// undefined.
    #[error("xi = {0:?} is degenerate: need |xi| > 0 and a nonzero horizontal part")]
    DegenerateXi([f64; 3]),
    /// The conjugated symbol vanishes at a lattice point even after the
    /// half-lattice shift and a re-padded retry.
    #[error("Fourier symbol singular: min |symbol| = {0:.3e}")]
    SymbolSingular(f64),
    /// The fixed point stalled or hit the iteration cap.
    #[error("fixed point did not converge: {iterations} iterations, relative change {change:.3e}")]
    NoConvergence { iterations: usize, change: f64 },
}

/// Which member of the frequency pair (and hence which factorization) a CGO
/// solve targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// `zeta_1` with potential `Q` and lead vector `L`.
    Principal,
    /// `zeta_2` with potential `Q-hat` and the lead vector that the `P`
    /// phase multiplier carries to the first-order `M`-form.
    Adjoint,
}

/// Which amplitude channel the lead vector excites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    /// Electric channel: `B = 0`, `A` normalized against the asymptotic
    /// direction.
    F,
    /// Magnetic channel: `A = 0`, `B` normalized the same way.
    G,
}

/// A conjugate pair of complex frequencies built from `xi`, `tau`, `k`.
#[derive(Debug, Clone)]
pub struct ZetaPair {
    pub xi: [f64; 3],
    pub tau: f64,
    pub k: f64,
    /// Horizontal unit vector orthogonal to `xi`.
    pub eta1: [f64; 3],
    /// `eta1 x xi / |xi|`, completing the orthonormal frame with `xi/|xi|`.
    pub eta2: [f64; 3],
    pub zeta1: [C64; 3],
    pub zeta2: [C64; 3],
}

const I: C64 = Complex64::new(0.0, 1.0);

/// Build the frequency pair
///
/// ```text
///   zeta_1 = -xi/2 + i (tau^2 + |xi|^2/4)^{1/2} eta1 + (tau^2 + k^2)^{1/2} eta2
///   zeta_2 = +xi/2 - i (tau^2 + |xi|^2/4)^{1/2} eta1 + (tau^2 + k^2)^{1/2} eta2
/// ```
///
/// satisfying `zeta_j . zeta_j = k^2` and `zeta_1 - conj(zeta_2) = -xi`.
pub fn choose_zetas(xi: [f64; 3], tau: f64, k: f64) -> Result<ZetaPair, CgoError> {
    let xi_norm = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
    let xi_h = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
    if xi_norm == 0.0 || xi_h < 1e-12 * xi_norm {
        return Err(CgoError::DegenerateXi(xi));
    }
    let eta1 = [xi[1] / xi_h, -xi[0] / xi_h, 0.0];
    // eta2 = eta1 x xi / |xi|.
    let eta2 = [
        -xi[0] * xi[2] / (xi_h * xi_norm),
        -xi[1] * xi[2] / (xi_h * xi_norm),
        xi_h * xi_h / (xi_h * xi_norm),
    ];
    let a = (tau * tau + 0.25 * xi_norm * xi_norm).sqrt();
    let b = (tau * tau + k * k).sqrt();
    let mut zeta1 = [Complex64::new(0.0, 0.0); 3];
    let mut zeta2 = [Complex64::new(0.0, 0.0); 3];
    for c in 0..3 {
        zeta1[c] = Complex64::new(-0.5 * xi[c] + b * eta2[c], a * eta1[c]);
        zeta2[c] = Complex64::new(0.5 * xi[c] + b * eta2[c], -a * eta1[c]);
    }
    Ok(ZetaPair { xi, tau, k, eta1, eta2, zeta1, zeta2 })
}

impl ZetaPair {
    pub fn zeta(&self, side: Side) -> [C64; 3] {
        match side {
            Side::Principal => self.zeta1,
            Side::Adjoint => self.zeta2,
        }
    }

    /// `|zeta|` (Euclidean norm of real and imaginary parts together).
    pub fn zeta_mag(&self, side: Side) -> f64 {
        let z = self.zeta(side);
        z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Asymptotic unit direction `(i eta1 + eta2) / sqrt(2)` shared by the
    /// normalization of both amplitudes.
    pub fn rho_plus(&self) -> [C64; 3] {
        let s = 1.0 / 2.0f64.sqrt();
        [
            s * (I * self.eta1[0] + self.eta2[0]),
            s * (I * self.eta1[1] + self.eta2[1]),
            s * (I * self.eta1[2] + self.eta2[2]),
        ]
    }

    /// Normalized amplitude pair `(A, B)` for the requested channel and
    /// side: `rho_plus . A_1 = 1` and `rho_plus . conj(A_2) = 1` (same for
    /// `B` in the magnetic channel).
    pub fn amplitudes(&self, channel: Channel, side: Side) -> ([C64; 3], [C64; 3]) {
        let rho = self.rho_plus();
        let vec = match side {
            Side::Principal => [rho[0].conj(), rho[1].conj(), rho[2].conj()],
            Side::Adjoint => rho,
        };
        let zero = [Complex64::new(0.0, 0.0); 3];
        match channel {
            Channel::F => (vec, zero),
            Channel::G => (zero, vec),
        }
    }

    /// The constant lead vector of the CGO ansatz:
    ///
    /// ```text
    ///   principal:  L = |zeta|^{-1} (zeta . A,  omega B,  zeta . B,  omega A)
    ///   adjoint:    L-hat = |zeta|^{-1} (0, B, 0, A)
    /// ```
    ///
    /// The adjoint lead is chosen so that the phase multiplier of `P` maps
    /// it exactly to the first-order lead [`ZetaPair::m_vector`]: applying
    /// `P` to `e^{i zeta . x} L-hat` produces `e^{i zeta . x} M` plus
    /// envelope-derivative terms.
    pub fn lead_vector(&self, channel: Channel, side: Side, omega: f64) -> [C64; 8] {
        let z = self.zeta(side);
        let (a, b) = self.amplitudes(channel, side);
        let inv = 1.0 / self.zeta_mag(side);
        let za = diff::dot(z, a);
        let zb = diff::dot(z, b);
        let zero = Complex64::new(0.0, 0.0);
        match side {
            Side::Principal => [
                inv * za,
                inv * omega * b[0],
                inv * omega * b[1],
                inv * omega * b[2],
                inv * zb,
                inv * omega * a[0],
                inv * omega * a[1],
                inv * omega * a[2],
            ],
            Side::Adjoint => [
                zero,
                inv * b[0],
                inv * b[1],
                inv * b[2],
                zero,
                inv * a[0],
                inv * a[1],
                inv * a[2],
            ],
        }
    }

    /// First-order adjoint lead
    ///
    /// ```text
    ///   M = |zeta|^{-1} (zeta . A, -zeta x A, zeta . B, zeta x B)
    /// ```
    ///
    /// reached from the adjoint [`ZetaPair::lead_vector`] by the `P` phase
    /// multiplier.
    pub fn m_vector(&self, channel: Channel) -> [C64; 8] {
        let z = self.zeta(Side::Adjoint);
        let (a, b) = self.amplitudes(channel, Side::Adjoint);
        let inv = 1.0 / self.zeta_mag(Side::Adjoint);
        let za = diff::dot(z, a);
        let zb = diff::dot(z, b);
        let zxa = diff::cross(z, a);
        let zxb = diff::cross(z, b);
        [
            inv * za,
            -inv * zxa[0],
            -inv * zxa[1],
            -inv * zxa[2],
            inv * zb,
            inv * zxb[0],
            inv * zxb[1],
            inv * zxb[2],
        ]
    }
}

/// Solver parameters for a CGO build.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CgoConfig {
    /// Nodes per axis of the periodic work box.
    pub n: usize,
    /// Nominal box side length (perturbed by `1 + 1/127` internally).
    pub box_len: f64,
    /// Relative-change stopping tolerance of the fixed point.
    pub tol: f64,
    /// Iteration cap.
    pub max_iter: usize,
}

impl Default for CgoConfig {
    fn default() -> Self {
        CgoConfig { n: 32, box_len: 6.0, tol: 1e-10, max_iter: 200 }
    }
}

/// Per-solve diagnostics, serialized as the CGO report artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CgoReport {
    pub side: Side,
    pub channel: Channel,
    pub xi: [f64; 3],
    pub tau: f64,
    pub zeta_re: [f64; 3],
    pub zeta_im: [f64; 3],
    pub n: usize,
    pub box_len: f64,
    pub iterations: usize,
    /// Relative change of the last fixed-point step.
    pub final_change: f64,
    /// Spectral residual of the conjugated equation.
    pub residual: f64,
    /// Smallest symbol magnitude encountered on the shifted lattice.
    pub min_symbol: f64,
    /// A priori contraction estimate; `>= 1` is reported as a warning,
    /// divergence is still detected from the iteration itself.
    pub q_rel: f64,
    pub remainder_l2: f64,
    pub lead_norm: f64,
    pub warnings: Vec<String>,
}

/// A CGO solution on the periodic work grid.
pub struct CgoSolution {
    pub grid: Grid3,
    pub zeta: [C64; 3],
    pub lead: [C64; 8],
    /// Remainder `R`.
    pub r: AugmentedField,
    /// Full solution `Z = e^{i zeta . x} (L + R)`.
    pub z: AugmentedField,
    pub report: CgoReport,
}

/// Periodic work grid centered at the origin: `n` nodes per axis, period
/// `len` (node spacing `len / n`; the last node is one spacing short of the
/// period, as the FFT requires).
fn work_grid(n: usize, len: f64) -> Grid3 {
    let h = len / n as f64;
    Grid3 { n: [n; 3], origin: [-len / 2.0; 3], h: [h; 3] }
}

/// Apply the Green multiplier `1 / sym(xi + delta)` to one conjugated scalar
/// volume (in place): caller has already removed the `e^{i delta . x}`
/// factor.
fn green_apply(data: &mut [C64], n: [usize; 3], lens: [f64; 3], zeta: [C64; 3], delta: f64) {
    fft3(data, n);
    for k in 0..n[2] {
        let fz = angular_freq(k, n[2], lens[2]);
        for j in 0..n[1] {
            let fy = angular_freq(j, n[1], lens[1]);
            for i in 0..n[0] {
                let fx = angular_freq(i, n[0], lens[0]) + delta;
                let sym = Complex64::new(fx * fx + fy * fy + fz * fz, 0.0)
                    + 2.0 * (zeta[0] * fx + zeta[1] * fy + zeta[2] * fz);
                data[(k * n[1] + j) * n[0] + i] /= sym;
            }
        }
    }
    ifft3(data, n);
}

/// Minimum symbol magnitude over the shifted lattice.
fn min_symbol(n: [usize; 3], lens: [f64; 3], zeta: [C64; 3], delta: f64) -> f64 {
    let mut m = f64::INFINITY;
    for k in 0..n[2] {
        let fz = angular_freq(k, n[2], lens[2]);
        for j in 0..n[1] {
            let fy = angular_freq(j, n[1], lens[1]);
            for i in 0..n[0] {
                let fx = angular_freq(i, n[0], lens[0]) + delta;
                let sym = Complex64::new(fx * fx + fy * fy + fz * fz, 0.0)
                    + 2.0 * (zeta[0] * fx + zeta[1] * fy + zeta[2] * fz);
                m = m.min(sym.norm());
            }
        }
    }
    m
}

/// One evaluation of the fixed-point right-hand side
/// `T(R) = -(Q + k^2)(L + R)` as an 8-field on the work grid.
fn rhs_field(
    pot: &Potentials,
    qmat: PotentialMatrix,
    lead: &[C64; 8],
    r: &AugmentedField,
) -> AugmentedField {
    let g = pot.grid;
    let mut out = AugmentedField::zeros(g);
    for (i, j, k) in g.iter_nodes() {
        let idx = g.idx(i, j, k);
        let mut m = pot.matrix_at(qmat, idx);
        for d in 0..8 {
            m[d][d] += Complex64::new(pot.k2, 0.0);
        }
        let rv = r.at(i, j, k);
        let mut v = [Complex64::new(0.0, 0.0); 8];
        for c in 0..8 {
            v[c] = lead[c] + rv[c];
        }
        let mut t = matvec8(&m, &v);
        for tv in t.iter_mut() {
            *tv = -*tv;
        }
        out.set(i, j, k, t);
    }
    out
}

/// Solve the conjugated remainder equation on the work grid of `pot` by
/// fixed-point iteration with the shifted Green multiplier.
pub fn faddeev_solve(
    pot: &Potentials,
    qmat: PotentialMatrix,
    zeta: [C64; 3],
    lead: &[C64; 8],
    tol: f64,
    max_iter: usize,
) -> Result<(AugmentedField, usize, f64, f64, f64), CgoError> {
    let g = pot.grid;
    let n = g.n;
    let lens = [
        n[0] as f64 * g.h[0],
        n[1] as f64 * g.h[1],
        n[2] as f64 * g.h[2],
    ];
    let delta = std::f64::consts::PI / lens[0];
    let minsym = min_symbol(n, lens, zeta, delta);
    let zmag2: f64 = zeta.iter().map(|v| v.norm_sqr()).sum();
    if minsym < 1e-10 * zmag2.max(1.0) {
        return Err(CgoError::SymbolSingular(minsym));
    }
    // Phase volumes for the half-lattice shift.
    let mut phase_fwd = vec![Complex64::new(0.0, 0.0); g.len()];
    for (i, j, k) in g.iter_nodes() {
        let x = g.coord(i, j, k);
        phase_fwd[g.idx(i, j, k)] = Complex64::new(0.0, delta * x[0]).exp();
    }
    let green = |f: &AugmentedField| -> AugmentedField {
        let comps = f.components();
        let mut out_comps = Vec::with_capacity(8);
        for comp in comps.iter() {
            let mut data: Vec<C64> = comp
                .data
                .iter()
                .zip(phase_fwd.iter())
                .map(|(&v, &p)| v * p.conj())
                .collect();
            green_apply(&mut data, n, lens, zeta, delta);
            for (v, p) in data.iter_mut().zip(phase_fwd.iter()) {
                *v *= p;
            }
            out_comps.push(crate::grid::ScalarField { grid: g, data });
        }
        let arr: [crate::grid::ScalarField; 8] =
            out_comps.try_into().ok().expect("eight components");
        AugmentedField::from_components(g, arr)
    };
    let mut r = AugmentedField::zeros(g);
    let mut change = f64::INFINITY;
    let mut prev_change = f64::INFINITY;
    let mut iters = 0usize;
    for it in 1..=max_iter {
        iters = it;
        let t = rhs_field(pot, qmat, lead, &r);
        let r_new = green(&t);
        let scale = r_new.l2().max(1e-300);
        change = r_new.sub(&r).l2() / scale;
        r = r_new;
        if change < tol {
            break;
        }
        if it > 5 && change > 2.0 * prev_change && change > 1.0 {
            return Err(CgoError::NoConvergence { iterations: it, change });
        }
        prev_change = change;
    }
    if change >= tol.max(1e-8) && iters == max_iter {
        return Err(CgoError::NoConvergence { iterations: iters, change });
    }
    // Spectral residual of the conjugated equation: the forward operator is
    // the inverse multiplier, so compare G^{-1} R against T(R).
    let t = rhs_field(pot, qmat, lead, &r);
    let gt = green(&t);
    let residual = gt.sub(&r).l2() / t.l2().max(1e-300);
    Ok((r, iters, change, residual, minsym))
}

/// Build a CGO solution for one side of a frequency pair, retrying once on a
/// re-padded box if the shifted symbol is still near-singular.
pub fn build_cgo(
    mu: &impl CoeffFn,
    gamma: &impl CoeffFn,
    omega: f64,
    zp: &ZetaPair,
    channel: Channel,
    side: Side,
    cfg: &CgoConfig,
) -> Result<CgoSolution, CgoError> {
    let qmat = match side {
        Side::Principal => PotentialMatrix::Q,
        Side::Adjoint => PotentialMatrix::QHat,
    };
    let zeta = zp.zeta(side);
    let lead = zp.lead_vector(channel, side, omega);
    let mut attempt_len = cfg.box_len * (1.0 + 1.0 / 127.0);
    let mut last_err = None;
    for attempt in 0..2 {
        let g = work_grid(cfg.n, attempt_len);
        let pot = Potentials::from_analytic(mu, gamma, omega, g)?;
        match faddeev_solve(&pot, qmat, zeta, &lead, cfg.tol, cfg.max_iter) {
            Ok((r, iterations, final_change, residual, min_sym)) => {
                let mut warnings = Vec::new();
                let zmag = zp.zeta_mag(side);
                let q_rel = 4.0 * pot.q_plus_k2_sup_sum(qmat) / zmag.max(1e-300);
                if q_rel >= 1.0 {
                    warnings.push(format!(
                        "contraction estimate q_rel = {q_rel:.3e} >= 1; relying on observed convergence"
                    ));
                }
                if attempt == 1 {
                    warnings.push("work box re-padded after a singular symbol".into());
                }
                let mut z = AugmentedField::zeros(g);
                for (i, j, k) in g.iter_nodes() {
                    let x = g.coord(i, j, k);
                    let ph = (I * (zeta[0] * x[0] + zeta[1] * x[1] + zeta[2] * x[2])).exp();
                    let rv = r.at(i, j, k);
                    let mut v = [Complex64::new(0.0, 0.0); 8];
                    for c in 0..8 {
                        v[c] = ph * (lead[c] + rv[c]);
                    }
                    z.set(i, j, k, v);
                }
                let lead_norm = lead.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                let report = CgoReport {
                    side,
                    channel,
                    xi: zp.xi,
                    tau: zp.tau,
                    zeta_re: [zeta[0].re, zeta[1].re, zeta[2].re],
                    zeta_im: [zeta[0].im, zeta[1].im, zeta[2].im],
                    n: cfg.n,
                    box_len: attempt_len,
                    iterations,
                    final_change,
                    residual,
                    min_symbol: min_sym,
                    q_rel,
                    remainder_l2: r.l2(),
                    lead_norm,
                    warnings,
                };
                return Ok(CgoSolution { grid: g, zeta, lead, r, z, report });
            }
            Err(e @ CgoError::SymbolSingular(_)) => {
                attempt_len *= 1.0 + 1.0 / 113.0;
                last_err = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.expect("retry loop exits with an error"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::CoeffExpr;

    fn sample_pair() -> ZetaPair {
        choose_zetas([1.0, 0.5, -0.3], 8.0, 2.0).unwrap()
    }

    #[test]
    fn zeta_pair_satisfies_exact_algebra() {
        for tau in [2.0, 8.0, 32.0] {
            let zp = choose_zetas([0.7, -1.1, 0.4], tau, 1.5).unwrap();
            for side in [Side::Principal, Side::Adjoint] {
                let z = zp.zeta(side);
                let dot = diff::dot(z, z);
                assert!((dot - Complex64::new(zp.k * zp.k, 0.0)).norm() < 1e-12 * (1.0 + tau * tau));
            }
            for c in 0..3 {
                let d = zp.zeta1[c] - zp.zeta2[c].conj() + Complex64::new(zp.xi[c], 0.0);
                assert!(d.norm() < 1e-12 * (1.0 + tau));
            }
        }
    }

    #[test]
    fn zeta_direction_approaches_asymptote_at_first_order() {
        let xi = [1.3, -0.4, 0.9];
        let k = 2.0;
        let mut errs = Vec::new();
        let taus = [8.0, 16.0, 32.0, 64.0];
        for &tau in &taus {
            let zp = choose_zetas(xi, tau, k).unwrap();
            let rho = zp.rho_plus();
            let z = zp.zeta1;
            let inv = 1.0 / zp.zeta_mag(Side::Principal);
            let mut e = 0.0f64;
            for c in 0..3 {
                e += (z[c] * inv - rho[c]).norm_sqr();
            }
            errs.push(e.sqrt());
        }
        for w in errs.windows(2) {
            let slope = (w[1] / w[0]).log2() / (2.0f64).log2();
            assert!(slope <= -0.8, "slope {slope}, errs {errs:?}");
        }
    }

    #[test]
    fn degenerate_xi_is_rejected() {
        assert!(matches!(
            choose_zetas([0.0, 0.0, 1.0], 4.0, 1.0),
            Err(CgoError::DegenerateXi(_))
        ));
        assert!(matches!(choose_zetas([0.0; 3], 4.0, 1.0), Err(CgoError::DegenerateXi(_))));
    }

    #[test]
    fn amplitude_normalization_is_exact() {
        let zp = sample_pair();
        let rho = zp.rho_plus();
        let (a1, _) = zp.amplitudes(Channel::F, Side::Principal);
        let (a2, _) = zp.amplitudes(Channel::F, Side::Adjoint);
        let n1 = diff::dot(rho, a1);
        let a2c = [a2[0].conj(), a2[1].conj(), a2[2].conj()];
        let n2 = diff::dot(rho, a2c);
        assert!((n1 - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!((n2 - Complex64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn free_space_remainder_vanishes() {
        // mu = gamma = 1: Q + k^2 = 0, so R = 0 after one iteration.
        let mu = CoeffExpr::constant(1.0);
        let gamma = CoeffExpr::constant(1.0);
        let omega = 2.0;
        let zp = choose_zetas([1.0, 0.4, 0.2], 4.0, omega).unwrap();
        let cfg = CgoConfig { n: 16, box_len: 4.0, ..Default::default() };
        let sol = build_cgo(&mu, &gamma, omega, &zp, Channel::F, Side::Principal, &cfg).unwrap();
        assert!(sol.r.linf() < 1e-14);
        assert_eq!(sol.report.warnings.len(), 0);
        assert!(sol.report.residual < 1e-12);
    }

    #[test]
    fn remainder_decays_in_tau_and_residual_is_small() {
        let mu = CoeffExpr::GaussianBump {
            base: [1.0, 0.0],
            amplitude: [0.15, 0.0],
            center: [0.1, 0.0, 0.0],
            width: 0.4,
        };
        let gamma = CoeffExpr::GaussianBump {
            base: [1.0, 0.0],
            amplitude: [0.2, 0.08],
            center: [-0.1, 0.1, 0.0],
            width: 0.4,
        };
        let omega = 1.0;
        let cfg = CgoConfig { n: 24, box_len: 5.0, ..Default::default() };
        let mut norms = Vec::new();
        for tau in [4.0, 8.0, 16.0] {
            let zp = choose_zetas([0.9, 0.5, 0.3], tau, omega).unwrap();
            let sol = build_cgo(&mu, &gamma, omega, &zp, Channel::F, Side::Principal, &cfg).unwrap();
            assert!(sol.report.residual < 1e-8, "residual {}", sol.report.residual);
            norms.push(sol.report.remainder_l2);
        }
        for w in norms.windows(2) {
            let slope = (w[1] / w[0]).log2() / (2.0f64).log2();
            assert!(slope <= -0.8, "slope {slope}, norms {norms:?}");
        }
    }

    #[test]
    fn adjoint_side_solves_with_qhat() {
        let mu = CoeffExpr::constant(1.0);
        let gamma = CoeffExpr::GaussianBump {
            base: [1.0, 0.0],
            amplitude: [0.2, 0.05],
            center: [0.0, 0.0, 0.0],
            width: 0.35,
        };
        let omega = 1.0;
        let zp = choose_zetas([0.8, -0.6, 0.2], 6.0, omega).unwrap();
        let cfg = CgoConfig { n: 20, box_len: 4.5, ..Default::default() };
        let sol = build_cgo(&mu, &gamma, omega, &zp, Channel::G, Side::Adjoint, &cfg).unwrap();
        assert!(sol.report.residual < 1e-8);
        // Adjoint lead carries the amplitudes in the vector slots; the
        // first-order M-form has zeta . B in the second scalar slot.
        let (_, b) = zp.amplitudes(Channel::G, Side::Adjoint);
        let inv = 1.0 / zp.zeta_mag(Side::Adjoint);
        assert!((sol.lead[1] - inv * b[0]).norm() < 1e-13);
        let m = zp.m_vector(Channel::G);
        let want = diff::dot(zp.zeta2, b) / zp.zeta_mag(Side::Adjoint);
        assert!((m[4] - want).norm() < 1e-13);
        // Report serializes.
        let js = serde_json::to_string(&sol.report).unwrap();
        assert!(js.contains("remainder_l2"));
    }
}
