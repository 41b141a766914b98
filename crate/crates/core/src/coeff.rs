//! Coefficient phantoms and their extension to the whole space.
//!
//! Coefficients are closed-form expressions with analytic gradients and
//! Hessians, so the zeroth-order potentials assembled from `alpha = log
//! gamma`, `beta = log mu` are exact up to rounding. A finite-difference
//! sampling path exists alongside for oracle cross-checks.
//!
//! Extension of a coefficient defined on the flat domain `U`:
//!
//! 1. even reflection across `x3 = 0` (valid when the normal derivative
//!    vanishes on Γ₀, checked as a hard gate);
//! 2. blend to the background constant through a quintic `C^2` cutoff
//!    supported in the ball `B(O; rho)` over a shell of width `rho / 4`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::ValidatedDomain;
use crate::grid::{Grid3, ScalarField, C64};
use crate::trace::BoxFace;

/// Background (free-space) permittivity; dimensionless desk scale.
pub const EPSILON_0: f64 = 1.0;
/// Background permeability.
pub const MU_0: f64 = 1.0;

/// Errors raised by coefficient validation and extension.
#[derive(Debug, Error)]
pub enum CoeffError {
    /// Uniform ellipticity `Re gamma >= 1/M`, `mu >= 1/M` fails at a node.
    #[error("ellipticity violated at x = {x:?}: {detail}")]
    NonElliptic { x: [f64; 3], detail: String },
    /// `Re gamma <= 0` somewhere, so the principal log branch is invalid.
    #[error("principal log branch invalid: Re gamma <= 0 at x = {0:?}")]
    LogBranch([f64; 3]),
    /// The flat-face normal derivative exceeds tolerance, so even reflection
    /// would break `C^{1,1}` smoothness.
    #[error("normal derivative on the flat face is {0:.3e}, exceeding tolerance")]
    NeumannViolation(f64),
}

/// A coefficient given by closed-form value, gradient and Hessian.
pub trait CoeffFn: Sync {
    fn value(&self, x: [f64; 3]) -> C64;
    fn grad(&self, x: [f64; 3]) -> [C64; 3];
    fn hessian(&self, x: [f64; 3]) -> [[C64; 3]; 3];
}

/// One monomial `coef * x1^p1 x2^p2 x3^p3`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolyTerm {
    pub coef: [f64; 2],
    pub powers: [u32; 3],
}

/// Closed-form coefficient expression with analytic derivatives.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CoeffExpr {
    /// Constant value (re, im).
    Constant { value: [f64; 2] },
    /// Sum of monomials.
    Polynomial { terms: Vec<PolyTerm> },
    /// `base + amplitude * exp(-|x - center|^2 / width^2)`.
    GaussianBump {
        base: [f64; 2],
        amplitude: [f64; 2],
        center: [f64; 3],
        width: f64,
    },
    /// `scale * exp(direction . x)`.
    Exponential { scale: [f64; 2], direction: [f64; 3] },
    /// Pointwise sum of sub-expressions.
    Sum { terms: Vec<CoeffExpr> },
}

fn cx(v: [f64; 2]) -> C64 {
    Complex64::new(v[0], v[1])
}

impl CoeffExpr {
    pub fn constant(re: f64) -> Self {
        CoeffExpr::Constant { value: [re, 0.0] }
    }

    pub fn value(&self, x: [f64; 3]) -> C64 {
        match self {
            CoeffExpr::Constant { value } => cx(*value),
            CoeffExpr::Polynomial { terms } => terms
                .iter()
                .map(|t| {
                    cx(t.coef)
                        * x[0].powi(t.powers[0] as i32)
                        * x[1].powi(t.powers[1] as i32)
                        * x[2].powi(t.powers[2] as i32)
                })
                .sum(),
            CoeffExpr::GaussianBump { base, amplitude, center, width } => {
                let r2 = (0..3).map(|c| (x[c] - center[c]).powi(2)).sum::<f64>();
                cx(*base) + cx(*amplitude) * (-r2 / (width * width)).exp()
            }
            CoeffExpr::Exponential { scale, direction } => {
                let d = direction[0] * x[0] + direction[1] * x[1] + direction[2] * x[2];
                cx(*scale) * d.exp()
            }
            CoeffExpr::Sum { terms } => terms.iter().map(|t| t.value(x)).sum(),
        }
    }

    pub fn grad(&self, x: [f64; 3]) -> [C64; 3] {
        let zero = Complex64::new(0.0, 0.0);
        match self {
            CoeffExpr::Constant { .. } => [zero; 3],
            CoeffExpr::Polynomial { terms } => {
                let mut g = [zero; 3];
                for t in terms {
                    for axis in 0..3 {
                        let p = t.powers[axis];
                        if p == 0 {
                            continue;
                        }
                        let mut v = cx(t.coef) * p as f64;
                        for c in 0..3 {
                            let q = if c == axis { t.powers[c] - 1 } else { t.powers[c] };
                            v *= x[c].powi(q as i32);
                        }
                        g[axis] += v;
                    }
                }
                g
            }
            CoeffExpr::GaussianBump { amplitude, center, width, .. } => {
                let r2 = (0..3).map(|c| (x[c] - center[c]).powi(2)).sum::<f64>();
                let e = cx(*amplitude) * (-r2 / (width * width)).exp();
                let s = -2.0 / (width * width);
                [
                    e * (s * (x[0] - center[0])),
                    e * (s * (x[1] - center[1])),
                    e * (s * (x[2] - center[2])),
                ]
            }
            CoeffExpr::Exponential { direction, .. } => {
                let v = self.value(x);
                [v * direction[0], v * direction[1], v * direction[2]]
            }
            CoeffExpr::Sum { terms } => {
                let mut g = [zero; 3];
                for t in terms {
                    let tg = t.grad(x);
                    for c in 0..3 {
                        g[c] += tg[c];
                    }
                }
                g
            }
        }
    }

    pub fn hessian(&self, x: [f64; 3]) -> [[C64; 3]; 3] {
        let zero = Complex64::new(0.0, 0.0);
        match self {
            CoeffExpr::Constant { .. } => [[zero; 3]; 3],
            CoeffExpr::Polynomial { terms } => {
                let mut h = [[zero; 3]; 3];
                for t in terms {
                    for a in 0..3 {
                        for b in 0..3 {
                            let mut pw = t.powers;
                            let mut fac = 1.0;
                            // d/dx_a then d/dx_b of the monomial.
                            if pw[a] == 0 {
                                continue;
                            }
                            fac *= pw[a] as f64;
                            pw[a] -= 1;
                            if pw[b] == 0 {
                                continue;
                            }
                            fac *= pw[b] as f64;
                            pw[b] -= 1;
                            let mut v = cx(t.coef) * fac;
                            for c in 0..3 {
                                v *= x[c].powi(pw[c] as i32);
                            }
                            h[a][b] += v;
                        }
                    }
                }
                h
            }
            CoeffExpr::GaussianBump { amplitude, center, width, .. } => {
                let w2 = width * width;
                let r2 = (0..3).map(|c| (x[c] - center[c]).powi(2)).sum::<f64>();
                let e = cx(*amplitude) * (-r2 / w2).exp();
                let mut h = [[zero; 3]; 3];
                for a in 0..3 {
                    for b in 0..3 {
                        let id = if a == b { 1.0 } else { 0.0 };
                        let q = 4.0 * (x[a] - center[a]) * (x[b] - center[b]) / (w2 * w2)
                            - 2.0 * id / w2;
                        h[a][b] = e * q;
                    }
                }
                h
            }
            CoeffExpr::Exponential { direction, .. } => {
                let v = self.value(x);
                let mut h = [[zero; 3]; 3];
                for a in 0..3 {
                    for b in 0..3 {
                        h[a][b] = v * direction[a] * direction[b];
                    }
                }
                h
            }
            CoeffExpr::Sum { terms } => {
                let mut h = [[zero; 3]; 3];
                for t in terms {
                    let th = t.hessian(x);
                    for a in 0..3 {
                        for b in 0..3 {
                            h[a][b] += th[a][b];
                        }
                    }
                }
                h
            }
        }
    }

    /// Sample onto a grid.
    pub fn sample(&self, grid: Grid3) -> ScalarField {
        ScalarField::from_fn(grid, |x| self.value(x))
    }
}

impl CoeffFn for CoeffExpr {
    fn value(&self, x: [f64; 3]) -> C64 {
        CoeffExpr::value(self, x)
    }
    fn grad(&self, x: [f64; 3]) -> [C64; 3] {
        CoeffExpr::grad(self, x)
    }
    fn hessian(&self, x: [f64; 3]) -> [[C64; 3]; 3] {
        CoeffExpr::hessian(self, x)
    }
}

/// Admissible coefficient pair `(mu, gamma)` with frequency and a priori
/// bounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientPair {
    pub mu: CoeffExpr,
    pub gamma: CoeffExpr,
    /// Positive frequency.
    pub omega: f64,
    /// Ellipticity / a priori bound `M`.
    pub m_bound: f64,
    /// Smoothness index `s` in `(0, 1/2)`.
    pub s: f64,
}

impl CoefficientPair {
    /// Check uniform ellipticity and the principal-log precondition on the
    /// nodes of `grid`.
    pub fn check_admissible(&self, grid: &Grid3) -> Result<(), CoeffError> {
        let minv = 1.0 / self.m_bound;
        for (i, j, k) in grid.iter_nodes() {
            let x = grid.coord(i, j, k);
            let g = self.gamma.value(x);
            let m = self.mu.value(x);
            if g.re <= 0.0 {
                return Err(CoeffError::LogBranch(x));
            }
            if g.re < minv {
                return Err(CoeffError::NonElliptic {
                    x,
                    detail: format!("Re gamma = {} < 1/M = {}", g.re, minv),
                });
            }
            if m.re < minv || m.im.abs() > 1e-12 * m.re.abs().max(1.0) {
                return Err(CoeffError::NonElliptic {
                    x,
                    detail: format!("mu = {} must be real and >= 1/M = {}", m, minv),
                });
            }
        }
        Ok(())
    }

    /// Check the flat-case extension hypothesis `d/dx3 mu = d/dx3 gamma = 0`
    /// on Γ₀.
    pub fn check_neumann(&self, domain: &ValidatedDomain) -> Result<(), CoeffError> {
        let tol = 1e-8 * self.m_bound;
        let g = &domain.u_grid;
        let top = BoxFace { axis: 2, side: 1 };
        let dims = top.dims(g);
        let mut worst = 0.0f64;
        for q in 0..dims[1] {
            for p in 0..dims[0] {
                let (i, j, k) = top.node3(g, p, q);
                let x = g.coord(i, j, k);
                if !domain.in_gamma0(x[0], x[1]) {
                    continue;
                }
                worst = worst.max(self.mu.grad(x)[2].norm());
                worst = worst.max(self.gamma.grad(x)[2].norm());
            }
        }
        if worst > tol {
            return Err(CoeffError::NeumannViolation(worst));
        }
        Ok(())
    }
}

/// A coefficient extended to the whole space: even reflection across
/// `x3 = 0` followed by a quintic blend to `background` supported in
/// `B(O; rho)`.
#[derive(Debug, Clone)]
pub struct ExtendedCoeff {
    pub expr: CoeffExpr,
    pub background: C64,
    pub rho: f64,
}

/// Quintic smoothstep `6 t^5 - 15 t^4 + 10 t^3` and derivatives.
fn smoothstep(t: f64) -> (f64, f64, f64) {
    let s = 6.0 * t.powi(5) - 15.0 * t.powi(4) + 10.0 * t.powi(3);
    let ds = 30.0 * t.powi(4) - 60.0 * t.powi(3) + 30.0 * t.powi(2);
    let dds = 120.0 * t.powi(3) - 180.0 * t.powi(2) + 60.0 * t;
    (s, ds, dds)
}

impl ExtendedCoeff {
    /// Cutoff `chi(|x|)`: 1 for `|x| <= 3 rho / 4`, 0 for `|x| >= rho`,
    /// quintic in between. Returns `(chi, chi', chi'')` as functions of `r`.
    fn cutoff(&self, r: f64) -> (f64, f64, f64) {
        let delta = self.rho / 4.0;
        let t = (self.rho - r) / delta;
        if t >= 1.0 {
            (1.0, 0.0, 0.0)
        } else if t <= 0.0 {
            (0.0, 0.0, 0.0)
        } else {
            let (s, ds, dds) = smoothstep(t);
            (s, -ds / delta, dds / (delta * delta))
        }
    }

    /// Even reflection `m(x) = (x1, x2, -|x3|)` and the sign of the third
    /// axis derivative.
    fn mirror(x: [f64; 3]) -> ([f64; 3], f64) {
        if x[2] > 0.0 {
            ([x[0], x[1], -x[2]], -1.0)
        } else {
            (x, 1.0)
        }
    }

    pub fn value(&self, x: [f64; 3]) -> C64 {
        let (m, _) = Self::mirror(x);
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let (chi, _, _) = self.cutoff(r);
        self.background + chi * (self.expr.value(m) - self.background)
    }

    pub fn grad(&self, x: [f64; 3]) -> [C64; 3] {
        let (m, sz) = Self::mirror(x);
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt().max(1e-300);
        let (chi, dchi, _) = self.cutoff(r);
        let v = self.expr.value(m) - self.background;
        let gm = self.expr.grad(m);
        let gsym = [gm[0], gm[1], gm[2] * sz];
        let xhat = [x[0] / r, x[1] / r, x[2] / r];
        [
            v * (dchi * xhat[0]) + chi * gsym[0],
            v * (dchi * xhat[1]) + chi * gsym[1],
            v * (dchi * xhat[2]) + chi * gsym[2],
        ]
    }

    pub fn hessian(&self, x: [f64; 3]) -> [[C64; 3]; 3] {
        let (m, sz) = Self::mirror(x);
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt().max(1e-300);
        let (chi, dchi, ddchi) = self.cutoff(r);
        let v = self.expr.value(m) - self.background;
        let gm = self.expr.grad(m);
        let gsym = [gm[0], gm[1], gm[2] * sz];
        let hm = self.expr.hessian(m);
        // H_sym = J H J with J = diag(1, 1, sz).
        let mut hsym = hm;
        for c in 0..3 {
            hsym[2][c] *= sz;
            hsym[c][2] *= sz;
        }
        let xhat = [x[0] / r, x[1] / r, x[2] / r];
        let mut h = [[Complex64::new(0.0, 0.0); 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                let id = if a == b { 1.0 } else { 0.0 };
                let chi_ab =
                    ddchi * xhat[a] * xhat[b] + dchi * (id - xhat[a] * xhat[b]) / r;
                h[a][b] = v * chi_ab
                    + dchi * (xhat[a] * gsym[b] + xhat[b] * gsym[a])
                    + chi * hsym[a][b];
            }
        }
        h
    }

    pub fn sample(&self, grid: Grid3) -> ScalarField {
        ScalarField::from_fn(grid, |x| self.value(x))
    }
}

impl CoeffFn for ExtendedCoeff {
    fn value(&self, x: [f64; 3]) -> C64 {
        ExtendedCoeff::value(self, x)
    }
    fn grad(&self, x: [f64; 3]) -> [C64; 3] {
        ExtendedCoeff::grad(self, x)
    }
    fn hessian(&self, x: [f64; 3]) -> [[C64; 3]; 3] {
        ExtendedCoeff::hessian(self, x)
    }
}

/// Coefficient pair extended to the whole space (boxed to `B(O; rho)`).
#[derive(Debug, Clone)]
pub struct ExtendedPair {
    pub mu: ExtendedCoeff,
    pub gamma: ExtendedCoeff,
    pub omega: f64,
    pub m_bound: f64,
    pub s: f64,
    pub rho: f64,
}

/// Extend an admissible pair defined on a flat domain: even reflection plus
/// `C^2` blend to the background constants inside `B(O; rho)`.
pub fn extend_coefficients(
    pair: &CoefficientPair,
    domain: &ValidatedDomain,
    rho: f64,
) -> Result<ExtendedPair, CoeffError> {
    pair.check_neumann(domain)?;
    let hi = domain.omega_grid.hi();
    let lo = domain.omega_grid.origin;
    let rad = (0..3)
        .map(|c| lo[c].abs().max(hi[c].abs()))
        .fold(0.0f64, f64::max)
        * 3.0f64.sqrt();
    assert!(rho > rad, "extension ball must contain the closure of Omega");
    Ok(ExtendedPair {
        mu: ExtendedCoeff {
            expr: pair.mu.clone(),
            background: Complex64::new(MU_0, 0.0),
            rho,
        },
        gamma: ExtendedCoeff {
            expr: pair.gamma.clone(),
            background: Complex64::new(EPSILON_0, 0.0),
            rho,
        },
        omega: pair.omega,
        m_bound: pair.m_bound,
        s: pair.s,
        rho,
    })
}
