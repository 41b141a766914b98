//! Frequency-domain Maxwell forward solver, Cauchy-data extraction and the
//! pseudo-distance between restricted Cauchy data sets.
//!
//! The solver discretizes the second-order curl-curl form
//! `curl(mu^{-1} curl E) - omega^2 gamma E = 0` on a Yee-staggered edge grid:
//! electric unknowns live on cell edges, `mu^{-1}` is sampled at face
//! centers, `gamma` at edge midpoints. Tangential boundary data fixes every
//! boundary edge; the interior system is solved by BiCGStab. The magnetic
//! field is recovered on faces as `H = (i omega mu)^{-1} curl E` and both
//! fields are averaged back to grid nodes (second-order, with linear
//! extrapolation at the boundary layer).
//!
//! A Cauchy datum is the pair of tangential traces `(T, S) = (N x E, N x H)`
//! with `S` restricted to the accessible part Γ. The pseudo-distance between
//! two data sets is estimated over a finite dictionary of boundary inputs:
//! for each unit-`T` datum of one set, the distance to the linear span of
//! the other set is a least-squares problem in the Hilbert embedding of the
//! `TH` norms.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coeff::CoeffFn;
use crate::geometry::ValidatedDomain;
use crate::grid::{Grid3, VectorField, C64};
use crate::trace::{BoundaryTrace, BoxFace};

/// Errors raised by the forward layer.
#[derive(Debug, Error)]
pub enum ForwardError {
    /// Conditioning indicator of the linear system exceeds the resonance
    /// threshold.
    #[error("near a resonant frequency: conditioning indicator {0:.3e}")]
    NearResonance(f64),
    /// Boundary input has a normal component or violates its support
    /// constraint.
    #[error("invalid boundary input: {0}")]
    NonTangentialData(String),
    /// A normal-component compatibility identity fails beyond tolerance.
    #[error("normal-component identity violated: relative error {err:.3e} > {tol:.3e}")]
    IdentityViolation { err: f64, tol: f64 },
    /// A Cauchy data set has no members.
    #[error("empty Cauchy data set")]
    EmptySet,
    /// A datum's electric trace norm is too small to normalize.
    #[error("degenerate datum: ||T|| = {0:.3e}")]
    NormDegenerate(f64),
    /// The iterative solver stalled away from the tolerance.
    #[error("linear solver stalled after {iterations} iterations, residual {residual:.3e}")]
    SolverStall { iterations: usize, residual: f64 },
}

/// Complex samples on the edges of a Yee grid: component `c` lives on edges
/// parallel to axis `c`, staggered half a cell along that axis.
#[derive(Debug, Clone)]
pub struct EdgeField {
    pub grid: Grid3,
    pub comp: [Vec<C64>; 3],
}

/// Edge-array dimensions of component `c`.
pub fn edge_dims(grid: &Grid3, c: usize) -> [usize; 3] {
    let mut d = grid.n;
    d[c] -= 1;
    d
}

/// Face-array dimensions of the staggered magnetic component `c` (staggered
/// along both axes other than `c`).
pub fn face_dims(grid: &Grid3, c: usize) -> [usize; 3] {
    let mut d = grid.n;
    d[(c + 1) % 3] -= 1;
    d[(c + 2) % 3] -= 1;
    d
}

#[inline]
fn idx3(d: [usize; 3], i: usize, j: usize, k: usize) -> usize {
    (k * d[1] + j) * d[0] + i
}

impl EdgeField {
    pub fn zeros(grid: Grid3) -> Self {
        let comp = [0, 1, 2].map(|c| {
            let d = edge_dims(&grid, c);
            vec![Complex64::new(0.0, 0.0); d[0] * d[1] * d[2]]
        });
        EdgeField { grid, comp }
    }

    /// Midpoint of edge `(c, i, j, k)`.
    pub fn midpoint(grid: &Grid3, c: usize, i: usize, j: usize, k: usize) -> [f64; 3] {
        let mut x = grid.coord(i, j, k);
        x[c] += 0.5 * grid.h[c];
        x
    }

    /// Does edge `(c, i, j, k)` lie in a boundary face of the box?
    pub fn is_boundary(grid: &Grid3, c: usize, i: usize, j: usize, k: usize) -> bool {
        let pos = [i, j, k];
        let (a, b) = ((c + 1) % 3, (c + 2) % 3);
        pos[a] == 0 || pos[a] == grid.n[a] - 1 || pos[b] == 0 || pos[b] == grid.n[b] - 1
    }

    pub fn add(&self, other: &Self) -> Self {
        let comp = [0, 1, 2].map(|c| {
            self.comp[c]
                .iter()
                .zip(other.comp[c].iter())
                .map(|(&a, &b)| a + b)
                .collect()
        });
        EdgeField { grid: self.grid, comp }
    }
}

/// Discretized curl-curl system for one coefficient pair at one frequency.
pub struct YeeSystem {
    pub grid: Grid3,
    pub omega: f64,
    /// `mu^{-1}` at face centers, per magnetic component.
    mu_inv: [Vec<C64>; 3],
    /// `gamma` at edge midpoints, per electric component.
    gamma_e: [Vec<C64>; 3],
    /// Interior (non-Dirichlet) edges in DOF order.
    dofs: Vec<(usize, usize, usize, usize)>,
}

impl YeeSystem {
    pub fn new(grid: Grid3, mu: &impl CoeffFn, gamma: &impl CoeffFn, omega: f64) -> Self {
        let mu_inv = [0, 1, 2].map(|c| {
            let d = face_dims(&grid, c);
            let (a, b) = ((c + 1) % 3, (c + 2) % 3);
            let mut v = Vec::with_capacity(d[0] * d[1] * d[2]);
            for k in 0..d[2] {
                for j in 0..d[1] {
                    for i in 0..d[0] {
                        let mut x = grid.coord(i, j, k);
                        x[a] += 0.5 * grid.h[a];
                        x[b] += 0.5 * grid.h[b];
                        v.push(Complex64::new(1.0, 0.0) / mu.value(x));
                    }
                }
            }
            v
        });
        let gamma_e = [0, 1, 2].map(|c| {
            let d = edge_dims(&grid, c);
            let mut v = Vec::with_capacity(d[0] * d[1] * d[2]);
            for k in 0..d[2] {
                for j in 0..d[1] {
                    for i in 0..d[0] {
                        v.push(gamma.value(EdgeField::midpoint(&grid, c, i, j, k)));
                    }
                }
            }
            v
        });
        let mut dofs = Vec::new();
        for c in 0..3 {
            let d = edge_dims(&grid, c);
            for k in 0..d[2] {
                for j in 0..d[1] {
                    for i in 0..d[0] {
                        if !EdgeField::is_boundary(&grid, c, i, j, k) {
                            dofs.push((c, i, j, k));
                        }
                    }
                }
            }
        }
        YeeSystem { grid, omega, mu_inv, gamma_e, dofs }
    }

    pub fn dof_count(&self) -> usize {
        self.dofs.len()
    }

    /// Plain staggered curl of an edge field, on faces.
    pub fn curl_edges(&self, e: &EdgeField) -> [Vec<C64>; 3] {
        let g = &self.grid;
        let h = g.h;
        [0, 1, 2].map(|c| {
            let a = (c + 1) % 3;
            let b = (c + 2) % 3;
            let d = face_dims(g, c);
            let da = edge_dims(g, a);
            let db = edge_dims(g, b);
            let mut out = vec![Complex64::new(0.0, 0.0); d[0] * d[1] * d[2]];
            for k in 0..d[2] {
                for j in 0..d[1] {
                    for i in 0..d[0] {
                        // (curl E)_c = d(E_b)/d a - d(E_a)/d b.
                        let pb = [i, j, k];
                        let mut pb1 = [i, j, k];
                        pb1[a] += 1;
                        let pa = [i, j, k];
                        let mut pa1 = [i, j, k];
                        pa1[b] += 1;
                        let vb1 = e.comp[b][idx3(db, pb1[0], pb1[1], pb1[2])];
                        let vb0 = e.comp[b][idx3(db, pb[0], pb[1], pb[2])];
                        let va1 = e.comp[a][idx3(da, pa1[0], pa1[1], pa1[2])];
                        let va0 = e.comp[a][idx3(da, pa[0], pa[1], pa[2])];
                        out[idx3(d, i, j, k)] = (vb1 - vb0) / h[a] - (va1 - va0) / h[b];
                    }
                }
            }
            out
        })
    }

    /// Full operator `curl(mu^{-1} curl E) - omega^2 gamma E` on interior
    /// edges (boundary-edge outputs are zero: those rows are Dirichlet).
    pub fn apply(&self, e: &EdgeField) -> EdgeField {
        let g = &self.grid;
        let h = g.h;
        let mut gfield = self.curl_edges(e);
        for c in 0..3 {
            for (v, m) in gfield[c].iter_mut().zip(self.mu_inv[c].iter()) {
                *v *= m;
            }
        }
        let mut out = EdgeField::zeros(*g);
        let w2 = self.omega * self.omega;
        for c in 0..3 {
            let a = (c + 1) % 3;
            let b = (c + 2) % 3;
            let d = edge_dims(g, c);
            let dfa = face_dims(g, a);
            let dfb = face_dims(g, b);
            for k in 0..d[2] {
                for j in 0..d[1] {
                    for i in 0..d[0] {
                        if EdgeField::is_boundary(g, c, i, j, k) {
                            continue;
                        }
                        // (curl G)_c = d(G_b)/d a - d(G_a)/d b, one cell back.
                        let p = [i, j, k];
                        let mut pa0 = p;
                        pa0[b] -= 1;
                        let mut pb0 = p;
                        pb0[a] -= 1;
                        let gb1 = gfield[b][idx3(dfb, p[0], p[1], p[2])];
                        let gb0 = gfield[b][idx3(dfb, pb0[0], pb0[1], pb0[2])];
                        let ga1 = gfield[a][idx3(dfa, p[0], p[1], p[2])];
                        let ga0 = gfield[a][idx3(dfa, pa0[0], pa0[1], pa0[2])];
                        let curl2 = (gb1 - gb0) / h[a] - (ga1 - ga0) / h[b];
                        let eidx = idx3(d, i, j, k);
                        out.comp[c][eidx] = curl2 - w2 * self.gamma_e[c][eidx] * e.comp[c][eidx];
                    }
                }
            }
        }
        out
    }

    fn restrict(&self, e: &EdgeField) -> Vec<C64> {
        self.dofs
            .iter()
            .map(|&(c, i, j, k)| e.comp[c][idx3(edge_dims(&self.grid, c), i, j, k)])
            .collect()
    }

    fn embed(&self, v: &[C64]) -> EdgeField {
        let mut e = EdgeField::zeros(self.grid);
        for (&(c, i, j, k), &val) in self.dofs.iter().zip(v.iter()) {
            e.comp[c][idx3(edge_dims(&self.grid, c), i, j, k)] = val;
        }
        e
    }

    /// Interior operator as a map on DOF vectors.
    pub fn apply_dofs(&self, v: &[C64]) -> Vec<C64> {
        self.restrict(&self.apply(&self.embed(v)))
    }

    /// Dense conditioning indicator (exact singular-value ratio) for small
    /// systems; falls back to power / inverse-power estimates otherwise.
    pub fn condition_indicator(&self) -> f64 {
        let n = self.dof_count();
        if n <= 1500 {
            let mut m = nalgebra::DMatrix::<Complex64>::zeros(n, n);
            let mut basis = vec![Complex64::new(0.0, 0.0); n];
            for col in 0..n {
                basis[col] = Complex64::new(1.0, 0.0);
                let out = self.apply_dofs(&basis);
                for (row, v) in out.iter().enumerate() {
                    m[(row, col)] = *v;
                }
                basis[col] = Complex64::new(0.0, 0.0);
            }
            let svd = m.svd(false, false);
            let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
            let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
            if smin <= 0.0 {
                return f64::INFINITY;
            }
            return smax / smin;
        }
        // Power iteration for the top singular value of the (complex
        // symmetric) operator, inverse iteration for the bottom one.
        let mut x: Vec<C64> = (0..n)
            .map(|i| Complex64::new(((i * 2654435761) % 1000) as f64 / 1000.0 - 0.5, 0.3))
            .collect();
        let norm = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let mut smax = 0.0;
        for _ in 0..20 {
            let y = self.apply_dofs(&x);
            smax = norm(&y) / norm(&x).max(1e-300);
            let ny = norm(&y).max(1e-300);
            x = y.into_iter().map(|v| v / ny).collect();
        }
        let mut smin = f64::INFINITY;
        let mut z = x.clone();
        for _ in 0..3 {
            match bicgstab(|v| self.apply_dofs(v), &z, 1e-8, 400) {
                Ok((y, _, _)) => {
                    let ny = norm(&y).max(1e-300);
                    smin = 1.0 / ny * norm(&z);
                    z = y.into_iter().map(|v| v / ny).collect();
                }
                Err(_) => return f64::INFINITY,
            }
        }
        smax / smin.max(1e-300)
    }
}

/// BiCGStab for a complex linear map. Returns `(x, relative residual,
/// iterations)`.
pub fn bicgstab(
    apply: impl Fn(&[C64]) -> Vec<C64>,
    b: &[C64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<C64>, f64, usize), ForwardError> {
    let n = b.len();
    let dot = |u: &[C64], v: &[C64]| -> C64 {
        u.iter().zip(v.iter()).map(|(a, c)| a.conj() * c).sum()
    };
    let norm = |v: &[C64]| -> f64 { v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() };
    let bnorm = norm(b).max(1e-300);
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    let mut r = b.to_vec();
    let r0 = r.clone();
    let mut rho = Complex64::new(1.0, 0.0);
    let mut alpha = Complex64::new(1.0, 0.0);
    let mut omega_s = Complex64::new(1.0, 0.0);
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    let mut p = vec![Complex64::new(0.0, 0.0); n];
    let mut relres = norm(&r) / bnorm;
    if relres < tol {
        return Ok((x, relres, 0));
    }
    for it in 1..=max_iter {
        let rho_new = dot(&r0, &r);
        if rho_new.norm() < 1e-300 {
            return Err(ForwardError::SolverStall { iterations: it, residual: relres });
        }
        let beta = (rho_new / rho) * (alpha / omega_s);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega_s * v[i]);
        }
        v = apply(&p);
        let denom = dot(&r0, &v);
        if denom.norm() < 1e-300 {
            return Err(ForwardError::SolverStall { iterations: it, residual: relres });
        }
        alpha = rho / denom;
        let s: Vec<C64> = r.iter().zip(v.iter()).map(|(ri, vi)| ri - alpha * vi).collect();
        if norm(&s) / bnorm < tol {
            for i in 0..n {
                x[i] += alpha * p[i];
            }
            return Ok((x, norm(&s) / bnorm, it));
        }
        let t = apply(&s);
        let tt = dot(&t, &t);
        if tt.norm() < 1e-300 {
            return Err(ForwardError::SolverStall { iterations: it, residual: relres });
        }
        omega_s = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * p[i] + omega_s * s[i];
            r[i] = s[i] - omega_s * t[i];
        }
        relres = norm(&r) / bnorm;
        if relres < tol {
            return Ok((x, relres, it));
        }
    }
    Err(ForwardError::SolverStall { iterations: max_iter, residual: relres })
}

/// Average a staggered array to nodes along `axis` (second order; linear
/// extrapolation at the two ends).
fn destagger(data: &[C64], dims: [usize; 3], axis: usize) -> (Vec<C64>, [usize; 3]) {
    let mut nd = dims;
    nd[axis] += 1;
    let n = nd[axis];
    let mut out = vec![Complex64::new(0.0, 0.0); nd[0] * nd[1] * nd[2]];
    for k in 0..nd[2] {
        for j in 0..nd[1] {
            for i in 0..nd[0] {
                let pos = [i, j, k][axis];
                let mut lo = [i, j, k];
                let v = if pos == 0 {
                    let mut p1 = lo;
                    p1[axis] = 1;
                    lo[axis] = 0;
                    1.5 * data[idx3(dims, lo[0], lo[1], lo[2])]
                        - 0.5 * data[idx3(dims, p1[0], p1[1], p1[2])]
                } else if pos == n - 1 {
                    let mut p1 = lo;
                    p1[axis] = dims[axis] - 2;
                    lo[axis] = dims[axis] - 1;
                    1.5 * data[idx3(dims, lo[0], lo[1], lo[2])]
                        - 0.5 * data[idx3(dims, p1[0], p1[1], p1[2])]
                } else {
                    let mut p0 = lo;
                    p0[axis] = pos - 1;
                    lo[axis] = pos;
                    0.5 * (data[idx3(dims, p0[0], p0[1], p0[2])]
                        + data[idx3(dims, lo[0], lo[1], lo[2])])
                };
                out[idx3(nd, i, j, k)] = v;
            }
        }
    }
    (out, nd)
}

/// Result of one forward solve.
pub struct ForwardSolution {
    /// Electric field at grid nodes.
    pub e: VectorField,
    /// Magnetic field at grid nodes.
    pub h: VectorField,
    /// Relative linear-system residual.
    pub residual: f64,
    pub iterations: usize,
}

/// Options for [`maxwell_forward_solve`].
#[derive(Debug, Clone)]
pub struct SolveOpts {
    pub tol: f64,
    pub max_iter: usize,
    /// Estimate the conditioning indicator and fail with `NearResonance`
    /// above `1e12`.
    pub check_resonance: bool,
}

impl Default for SolveOpts {
    fn default() -> Self {
        SolveOpts { tol: 1e-9, max_iter: 4000, check_resonance: false }
    }
}

/// Fill boundary edges from a tangential vector function evaluated at edge
/// midpoints (component along the edge direction).
pub fn boundary_data_from_fn(
    grid: &Grid3,
    f: impl Fn([f64; 3]) -> [C64; 3],
) -> EdgeField {
    let mut e = EdgeField::zeros(*grid);
    for c in 0..3 {
        let d = edge_dims(grid, c);
        for k in 0..d[2] {
            for j in 0..d[1] {
                for i in 0..d[0] {
                    if EdgeField::is_boundary(grid, c, i, j, k) {
                        let x = EdgeField::midpoint(grid, c, i, j, k);
                        e.comp[c][idx3(d, i, j, k)] = f(x)[c];
                    }
                }
            }
        }
    }
    e
}

/// Solve the curl-curl boundary value problem with the given Dirichlet
/// tangential data on all boundary edges.
pub fn maxwell_forward_solve(
    grid: Grid3,
    mu: &impl CoeffFn,
    gamma: &impl CoeffFn,
    omega: f64,
    boundary: &EdgeField,
    opts: &SolveOpts,
) -> Result<ForwardSolution, ForwardError> {
    let sys = YeeSystem::new(grid, mu, gamma, omega);
    if opts.check_resonance {
        let cond = sys.condition_indicator();
        if cond > 1e12 {
            return Err(ForwardError::NearResonance(cond));
        }
    }
    let ab = sys.apply(boundary);
    let b: Vec<C64> = sys.restrict(&ab).into_iter().map(|v| -v).collect();
    let bnorm: f64 = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let (x, residual, iterations) = if bnorm < 1e-300 {
        (vec![Complex64::new(0.0, 0.0); sys.dof_count()], 0.0, 0)
    } else {
        bicgstab(|v| sys.apply_dofs(v), &b, opts.tol, opts.max_iter)?
    };
    let edges = boundary.add(&sys.embed(&x));
    // H on faces: (i omega mu)^{-1} curl E = mu^{-1} curl E / (i omega).
    let mut hfaces = sys.curl_edges(&edges);
    let iw = Complex64::new(0.0, omega);
    for c in 0..3 {
        for (v, m) in hfaces[c].iter_mut().zip(sys.mu_inv[c].iter()) {
            *v = *v * m / iw;
        }
    }
    // Average everything to nodes.
    let mut e_nodal = VectorField::zeros(grid);
    for c in 0..3 {
        let (data, dims) = destagger(&edges.comp[c], edge_dims(&grid, c), c);
        assert_eq!(dims, grid.n);
        e_nodal.comp[c] = data;
    }
    let mut h_nodal = VectorField::zeros(grid);
    for c in 0..3 {
        let a = (c + 1) % 3;
        let b2 = (c + 2) % 3;
        let (tmp, dims_tmp) = destagger(&hfaces[c], face_dims(&grid, c), a);
        let (data, dims) = destagger(&tmp, dims_tmp, b2);
        assert_eq!(dims, grid.n);
        h_nodal.comp[c] = data;
    }
    Ok(ForwardSolution { e: e_nodal, h: h_nodal, residual, iterations })
}

/// One Cauchy datum: electric trace `T` (supported in the closure of Γ) and
/// magnetic trace `S` restricted to Γ.
#[derive(Debug, Clone)]
pub struct CauchyDatum {
    pub t: BoundaryTrace,
    pub s: BoundaryTrace,
    pub input_id: String,
    /// Relative errors of the two normal-component identities.
    pub identity_errors: [f64; 2],
}

/// A set of Cauchy data generated from a dictionary of boundary inputs.
#[derive(Debug, Clone)]
pub struct CauchyDataSet {
    pub data: Vec<CauchyDatum>,
    pub coeffs_id: String,
    pub omega: f64,
}

/// Extract the Cauchy datum of a forward solution and verify the
/// normal-component identities
///
/// ```text
///   <N, gamma E> =  (1 / i omega) Div(N x H)
///   <N, mu H>    = -(1 / i omega) Div(N x E)
/// ```
///
/// in relative surface-`L^2`, failing above `tol`.
pub fn extract_cauchy(
    sol: &ForwardSolution,
    domain: &ValidatedDomain,
    mu: &impl CoeffFn,
    gamma: &impl CoeffFn,
    omega: f64,
    input_id: &str,
    tol: f64,
) -> Result<CauchyDatum, ForwardError> {
    let g = sol.e.grid;
    let mut t = BoundaryTrace::tangential(&sol.e);
    let mut s = BoundaryTrace::tangential(&sol.h);
    domain.tag_gamma0(&mut t);
    domain.tag_gamma0(&mut s);
    let iw = Complex64::new(0.0, omega);
    let mut errs = [0.0f64; 2];
    for which in 0..2 {
        let (trace, coeff_field, sign): (&BoundaryTrace, &dyn Fn([f64; 3]) -> C64, f64) =
            if which == 0 {
                (&s, &|x| gamma.value(x), 1.0)
            } else {
                (&t, &|x| mu.value(x), -1.0)
            };
        let mut num = 0.0;
        let mut lhs2 = 0.0;
        let mut rhs2 = 0.0;
        let mut fld2 = 0.0;
        for f in &trace.faces {
            let nrm = f.face.normal();
            for q in 0..f.n[1] {
                for p in 0..f.n[0] {
                    let (i, j, k) = f.face.node3(&g, p, q);
                    let x = g.coord(i, j, k);
                    let field = if which == 0 { sol.e.at(i, j, k) } else { sol.h.at(i, j, k) };
                    let lhs = coeff_field(x)
                        * (nrm[0] * field[0] + nrm[1] * field[1] + nrm[2] * field[2]);
                    let rhs = sign * f.div[q * f.n[0] + p] / iw;
                    let wq = if q == 0 || q == f.n[1] - 1 { 0.5 } else { 1.0 };
                    let wp = if p == 0 || p == f.n[0] - 1 { 0.5 } else { 1.0 };
                    let w = wp * wq * f.h[0] * f.h[1];
                    num += w * (lhs - rhs).norm_sqr();
                    lhs2 += w * lhs.norm_sqr();
                    rhs2 += w * rhs.norm_sqr();
                    let cf = coeff_field(x).norm();
                    fld2 += w
                        * cf
                        * cf
                        * field.iter().map(|z| z.norm_sqr()).sum::<f64>();
                }
            }
        }
        // Normalize by the identity's own size, floored by a fraction of the
        // full trace norm so near-tangential fields (tiny normal component)
        // are not penalized for roundoff-level defects.
        let den = lhs2.max(rhs2).max(0.0025 * fld2);
        errs[which] = (num / den.max(1e-300)).sqrt();
    }
    let scale = sol.e.linf().max(sol.h.linf());
    if scale > 1e-300 {
        for err in errs {
            if err > tol {
                return Err(ForwardError::IdentityViolation { err, tol });
            }
        }
    }
    Ok(CauchyDatum {
        t,
        s: s.restricted_to_gamma(),
        input_id: input_id.to_string(),
        identity_errors: errs,
    })
}

/// Dictionary of tangential boundary inputs on Γ.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dictionary {
    pub entries: Vec<DictEntry>,
}

/// One boundary input, supported on a single box face and windowed to
/// vanish at the face edges (so data on adjacent faces stays consistent).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DictEntry {
    /// Gaussian bump profile in face coordinates.
    Bump {
        face_axis: usize,
        face_side: usize,
        center: [f64; 2],
        width: f64,
        /// Complex amplitude vector as re/im pairs (must be tangential).
        amp: [[f64; 2]; 3],
    },
    /// Oscillatory profile `e^{i k . t}` times an edge window.
    WindowedWave {
        face_axis: usize,
        face_side: usize,
        wavevec: [f64; 2],
        amp: [[f64; 2]; 3],
    },
}

fn quintic01(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    6.0 * t.powi(5) - 15.0 * t.powi(4) + 10.0 * t.powi(3)
}

impl DictEntry {
    pub fn face(&self) -> BoxFace {
        match self {
            DictEntry::Bump { face_axis, face_side, .. }
            | DictEntry::WindowedWave { face_axis, face_side, .. } => {
                BoxFace { axis: *face_axis, side: *face_side }
            }
        }
    }

    fn amp(&self) -> [C64; 3] {
        let a = match self {
            DictEntry::Bump { amp, .. } | DictEntry::WindowedWave { amp, .. } => amp,
        };
        [0, 1, 2].map(|c| Complex64::new(a[c][0], a[c][1]))
    }

    /// Reject amplitudes with a normal component.
    pub fn validate(&self) -> Result<(), ForwardError> {
        let a = self.amp();
        let scale = a.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if a[self.face().axis].norm() > 1e-12 * scale.max(1e-300) {
            return Err(ForwardError::NonTangentialData(format!(
                "amplitude {:?} has a component along the face normal (axis {})",
                a,
                self.face().axis
            )));
        }
        Ok(())
    }

    /// Evaluate the input at a boundary point `x` of the box `[lo, hi]`
    /// (zero off the entry's face).
    pub fn eval(&self, x: [f64; 3], lo: [f64; 3], hi: [f64; 3]) -> [C64; 3] {
        let face = self.face();
        let fc = if face.side == 1 { hi[face.axis] } else { lo[face.axis] };
        let ext = hi[face.axis] - lo[face.axis];
        if (x[face.axis] - fc).abs() > 1e-9 * ext.max(1.0) {
            return [Complex64::new(0.0, 0.0); 3];
        }
        let ta = face.tangential_axes();
        let t = [x[ta[0]], x[ta[1]]];
        // Edge window: vanish smoothly within a quarter-extent margin.
        let mut win = 1.0;
        for (c, &axis) in ta.iter().enumerate() {
            let margin = 0.25 * (hi[axis] - lo[axis]);
            let dlo = (t[c] - lo[axis]) / margin;
            let dhi = (hi[axis] - t[c]) / margin;
            win *= quintic01(dlo) * quintic01(dhi);
        }
        let profile: C64 = match self {
            DictEntry::Bump { center, width, .. } => {
                let r2 = (t[0] - center[0]).powi(2) + (t[1] - center[1]).powi(2);
                Complex64::new((-r2 / (width * width)).exp(), 0.0)
            }
            DictEntry::WindowedWave { wavevec, .. } => {
                Complex64::new(0.0, wavevec[0] * t[0] + wavevec[1] * t[1]).exp()
            }
        };
        let a = self.amp();
        [a[0] * profile * win, a[1] * profile * win, a[2] * profile * win]
    }
}

impl Dictionary {
    /// Default dictionary: 24 inputs spread over the five faces away from
    /// the top (so supports avoid Γ₀ automatically): bumps at face quarter
    /// points and low-order windowed waves, two tangential polarizations
    /// each.
    pub fn default_for(lo: [f64; 3], hi: [f64; 3]) -> Dictionary {
        let mut entries = Vec::new();
        let faces = [
            BoxFace { axis: 0, side: 0 },
            BoxFace { axis: 0, side: 1 },
            BoxFace { axis: 1, side: 0 },
            BoxFace { axis: 1, side: 1 },
            BoxFace { axis: 2, side: 0 },
        ];
        for (fi, face) in faces.iter().enumerate() {
            let ta = face.tangential_axes();
            let mid = [
                0.5 * (lo[ta[0]] + hi[ta[0]]),
                0.5 * (lo[ta[1]] + hi[ta[1]]),
            ];
            let ext = [hi[ta[0]] - lo[ta[0]], hi[ta[1]] - lo[ta[1]]];
            for pol in 0..2 {
                let mut amp = [[0.0; 2]; 3];
                amp[ta[pol]] = [1.0, 0.0];
                entries.push(DictEntry::Bump {
                    face_axis: face.axis,
                    face_side: face.side,
                    center: [mid[0] - 0.12 * ext[0] * fi as f64 / 4.0, mid[1]],
                    width: 0.22 * ext[0].min(ext[1]),
                    amp,
                });
                entries.push(DictEntry::Bump {
                    face_axis: face.axis,
                    face_side: face.side,
                    center: [mid[0] + 0.15 * ext[0], mid[1] - 0.15 * ext[1]],
                    width: 0.17 * ext[0].min(ext[1]),
                    amp,
                });
            }
            // One windowed wave per face, first tangential polarization.
            let mut amp = [[0.0; 2]; 3];
            amp[ta[0]] = [1.0, 0.0];
            entries.push(DictEntry::WindowedWave {
                face_axis: face.axis,
                face_side: face.side,
                wavevec: [
                    2.0 * std::f64::consts::PI / ext[0],
                    -2.0 * std::f64::consts::PI / ext[1],
                ],
                amp,
            });
        }
        debug_assert_eq!(entries.len(), 25);
        entries.pop();
        Dictionary { entries }
    }
}

/// Solve the forward problem for every dictionary entry and collect the
/// Cauchy data set. Solves run in parallel.
pub fn solve_dictionary(
    domain: &ValidatedDomain,
    mu: &(impl CoeffFn + Sync),
    gamma: &(impl CoeffFn + Sync),
    omega: f64,
    dict: &Dictionary,
    coeffs_id: &str,
    opts: &SolveOpts,
    identity_tol: f64,
) -> Result<CauchyDataSet, ForwardError> {
    if dict.entries.is_empty() {
        return Err(ForwardError::EmptySet);
    }
    for e in &dict.entries {
        e.validate()?;
    }
    let g = domain.u_grid;
    let lo = g.origin;
    let hi = g.hi();
    let results: Vec<Result<CauchyDatum, ForwardError>> = dict
        .entries
        .par_iter()
        .enumerate()
        .map(|(idx, entry)| {
            let data = boundary_data_from_fn(&g, |x| entry.eval(x, lo, hi));
            let sol = maxwell_forward_solve(g, mu, gamma, omega, &data, opts)?;
            extract_cauchy(&sol, domain, mu, gamma, omega, &format!("input-{idx}"), identity_tol)
        })
        .collect();
    let mut data = Vec::with_capacity(results.len());
    for r in results {
        data.push(r?);
    }
    Ok(CauchyDataSet { data, coeffs_id: coeffs_id.to_string(), omega })
}

fn datum_embed(d: &CauchyDatum) -> Vec<C64> {
    let mut v = d.t.th_embed();
    v.extend(d.s.th_embed());
    v
}

/// Distance from normalized members of `from` to the linear span of `to`,
/// in the product `TH` embedding.
fn one_sided_distance(from: &CauchyDataSet, to: &CauchyDataSet) -> Result<f64, ForwardError> {
    if from.data.is_empty() || to.data.is_empty() {
        return Err(ForwardError::EmptySet);
    }
    let span: Vec<Vec<C64>> = to.data.iter().map(datum_embed).collect();
    let dim = span[0].len();
    let mut mat = nalgebra::DMatrix::<Complex64>::zeros(dim, span.len());
    for (c, col) in span.iter().enumerate() {
        for (r, v) in col.iter().enumerate() {
            mat[(r, c)] = *v;
        }
    }
    let svd = mat.clone().svd(true, true);
    let mut worst = 0.0f64;
    for d in &from.data {
        let tnorm = d.t.th_norm();
        if tnorm < 1e-14 {
            return Err(ForwardError::NormDegenerate(tnorm));
        }
        let scale = Complex64::new(1.0 / tnorm, 0.0);
        let v = nalgebra::DVector::<Complex64>::from_iterator(
            dim,
            datum_embed(d).into_iter().map(|z| z * scale),
        );
        let coeffs = svd.solve(&v, 1e-12).expect("least squares solve");
        let resid = (&mat * coeffs - &v).norm();
        worst = worst.max(resid);
    }
    Ok(worst)
}

/// Discretized pseudo-distance between two restricted Cauchy data sets:
/// max over both directions of (sup over unit-`T` data of one set of the
/// least-squares distance to the span of the other).
pub fn cauchy_distance(c1: &CauchyDataSet, c2: &CauchyDataSet) -> Result<f64, ForwardError> {
    let d12 = one_sided_distance(c1, c2)?;
    let d21 = one_sided_distance(c2, c1)?;
    Ok(d12.max(d21))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::CoeffExpr;
    use crate::geometry::{build_domain, DomainSpec, FlatSpec, Rect2};

    fn c(x: f64) -> C64 {
        Complex64::new(x, 0.0)
    }

    fn plane_wave(omega: f64) -> impl Fn([f64; 3]) -> [C64; 3] {
        // E = p e^{i omega d.x}, |d| = 1, p . d = 0.
        let d = [1.0 / 3.0f64.sqrt(); 3];
        let p = [1.0 / 2.0f64.sqrt(), -1.0 / 2.0f64.sqrt(), 0.0];
        move |x: [f64; 3]| {
            let ph = Complex64::new(0.0, omega * (d[0] * x[0] + d[1] * x[1] + d[2] * x[2])).exp();
            [p[0] * ph, p[1] * ph, p[2] * ph]
        }
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let g = Grid3::cube(0.0, 1.0, 7);
        let mu = CoeffExpr::constant(1.0);
        let gamma = CoeffExpr::constant(1.0);
        let data = EdgeField::zeros(g);
        let sol =
            maxwell_forward_solve(g, &mu, &gamma, 2.0, &data, &SolveOpts::default()).unwrap();
        assert!(sol.e.linf() < 1e-12);
        assert!(sol.h.linf() < 1e-12);
    }

    #[test]
    fn plane_wave_interior_error_refines_at_second_order() {
        let omega = 2.0;
        let mu = CoeffExpr::constant(1.0);
        let gamma = CoeffExpr::constant(1.0);
        let pw = plane_wave(omega);
        let mut errs = Vec::new();
        for n in [9usize, 17] {
            let g = Grid3::cube(0.0, 1.0, n);
            let data = boundary_data_from_fn(&g, &pw);
            let sol = maxwell_forward_solve(g, &mu, &gamma, omega, &data, &SolveOpts::default())
                .unwrap();
            let exact = VectorField::from_fn(g, &pw);
            let err = sol.e.sub(&exact).l2() / exact.l2();
            errs.push(err);
        }
        assert!(errs[0] < 0.05, "coarse error {}", errs[0]);
        let rate = errs[0] / errs[1];
        assert!(rate > 3.0, "refinement factor {rate}, errs {errs:?}");
    }

    fn test_domain(n: usize) -> ValidatedDomain {
        build_domain(&DomainSpec::Flat(FlatSpec {
            box_lo: [0.0, 0.0, -1.0],
            box_hi: [1.0, 1.0, 0.0],
            resolution: [n, n, n],
            gamma0: vec![Rect2 { lo: [0.25, 0.25], hi: [0.75, 0.75] }],
        }))
        .unwrap()
    }

    #[test]
    fn plane_wave_cauchy_identities_hold() {
        let omega = 2.0;
        let mu = CoeffExpr::constant(1.0);
        let gamma = CoeffExpr::constant(1.0);
        let pw = plane_wave(omega);
        let domain = test_domain(13);
        let g = domain.u_grid;
        let data = boundary_data_from_fn(&g, &pw);
        let sol =
            maxwell_forward_solve(g, &mu, &gamma, omega, &data, &SolveOpts::default()).unwrap();
        let datum = extract_cauchy(&sol, &domain, &mu, &gamma, omega, "pw", 0.5).unwrap();
        assert!(datum.identity_errors[0] < 0.2, "{:?}", datum.identity_errors);
        assert!(datum.identity_errors[1] < 0.2, "{:?}", datum.identity_errors);
        // S is restricted: zero on Gamma0 nodes.
        assert_eq!(datum.s.linf_on_gamma0(), 0.0);
    }

    #[test]
    fn solutions_scale_linearly_with_input() {
        let omega = 1.5;
        let mu = CoeffExpr::constant(1.0);
        let gamma = CoeffExpr::GaussianBump {
            base: [1.2, 0.0],
            amplitude: [0.3, 0.1],
            center: [0.5, 0.5, -0.5],
            width: 0.3,
        };
        let g = Grid3::from_box([0.0, 0.0, -1.0], [1.0, 1.0, 0.0], [8, 8, 8]);
        let entry = DictEntry::Bump {
            face_axis: 2,
            face_side: 0,
            center: [0.5, 0.5],
            width: 0.2,
            amp: [[1.0, 0.0], [0.5, 0.2], [0.0, 0.0]],
        };
        let lo = g.origin;
        let hi = g.hi();
        let d1 = boundary_data_from_fn(&g, |x| entry.eval(x, lo, hi));
        let s = Complex64::new(2.0, -1.0);
        let mut d2 = d1.clone();
        for comp in d2.comp.iter_mut() {
            for v in comp.iter_mut() {
                *v *= s;
            }
        }
        let o = SolveOpts::default();
        let s1 = maxwell_forward_solve(g, &mu, &gamma, omega, &d1, &o).unwrap();
        let s2 = maxwell_forward_solve(g, &mu, &gamma, omega, &d2, &o).unwrap();
        let diff = s2.e.sub(&s1.e.scale(s)).linf();
        assert!(diff < 1e-6 * s1.e.linf().max(1e-300), "linearity defect {diff}");
    }

    #[test]
    fn identical_sets_have_zero_distance() {
        let domain = test_domain(8);
        let mu = CoeffExpr::constant(1.0);
        let gamma = CoeffExpr::constant(1.3);
        let dict = Dictionary {
            entries: Dictionary::default_for(domain.u_grid.origin, domain.u_grid.hi())
                .entries
                .into_iter()
                .take(4)
                .collect(),
        };
        let set = solve_dictionary(
            &domain,
            &mu,
            &gamma,
            1.5,
            &dict,
            "pair",
            &SolveOpts::default(),
            2.0,
        )
        .unwrap();
        let d = cauchy_distance(&set, &set).unwrap();
        assert!(d < 1e-8, "self distance {d}");
    }

    #[test]
    fn singleton_orthogonal_distance_closed_form() {
        // Construct two synthetic singleton sets sharing T; the distance in
        // each direction is the least-squares residual of one embedded datum
        // against the span of the other.
        let domain = test_domain(8);
        let g = domain.u_grid;
        let u1 = VectorField::from_fn(g, |x| [c(x[1]), c(-x[0]), c(0.0)]);
        let u2 = VectorField::from_fn(g, |x| [c(x[2] * x[2]), c(x[0] * x[1]), c(0.1)]);
        let mk = |u: &VectorField| {
            let mut t = BoundaryTrace::tangential(u);
            domain.tag_gamma0(&mut t);
            CauchyDatum {
                t: t.clone(),
                s: t.restricted_to_gamma(),
                input_id: "syn".into(),
                identity_errors: [0.0, 0.0],
            }
        };
        let c1 = CauchyDataSet { data: vec![mk(&u1)], coeffs_id: "a".into(), omega: 1.0 };
        let c2 = CauchyDataSet { data: vec![mk(&u2)], coeffs_id: "b".into(), omega: 1.0 };
        let d = cauchy_distance(&c1, &c2).unwrap();
        // Direct evaluation of the same least-squares problem.
        let e1 = datum_embed(&c1.data[0]);
        let e2 = datum_embed(&c2.data[0]);
        let n1 = c1.data[0].t.th_norm();
        let dot = |a: &[C64], b: &[C64]| -> C64 {
            a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
        };
        let proj = dot(&e2, &e1) / dot(&e2, &e2);
        let mut resid2 = 0.0;
        for (a, b) in e1.iter().zip(e2.iter()) {
            resid2 += (a - proj * b).norm_sqr();
        }
        let want_12 = resid2.sqrt() / n1;
        assert!(d >= want_12 - 1e-10, "distance {d} vs one direction {want_12}");
    }

    #[test]
    fn nontangential_dictionary_amplitude_is_rejected() {
        let bad = DictEntry::Bump {
            face_axis: 2,
            face_side: 0,
            center: [0.5, 0.5],
            width: 0.2,
            amp: [[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]],
        };
        assert!(matches!(bad.validate(), Err(ForwardError::NonTangentialData(_))));
    }

    #[test]
    fn resonance_is_detected_by_condition_indicator() {
        // Dense eigenvalue scan on a tiny lossless cavity: the smallest
        // positive curl-curl eigenvalue is a resonant omega^2.
        let g = Grid3::cube(0.0, 1.0, 5);
        let mu = CoeffExpr::constant(1.0);
        let gamma = CoeffExpr::constant(1.0);
        let probe = YeeSystem::new(g, &mu, &gamma, 0.0);
        let n = probe.dof_count();
        let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
        let mut basis = vec![c(0.0); n];
        for col in 0..n {
            basis[col] = c(1.0);
            let out = probe.apply_dofs(&basis);
            for (row, v) in out.iter().enumerate() {
                m[(row, col)] = v.re;
            }
            basis[col] = c(0.0);
        }
        let eig = nalgebra::SymmetricEigen::new(m);
        let lam = eig
            .eigenvalues
            .iter()
            .cloned()
            .filter(|l| *l > 1e-6)
            .fold(f64::INFINITY, f64::min);
        let omega_res = lam.sqrt();
        let sys_res = YeeSystem::new(g, &mu, &gamma, omega_res);
        assert!(sys_res.condition_indicator() > 1e12, "resonant system not flagged");
        let sys_off = YeeSystem::new(g, &mu, &gamma, 0.7 * omega_res);
        assert!(sys_off.condition_indicator() < 1e10, "off-resonance system flagged");
        // The solver surfaces NearResonance through the option gate.
        let data = boundary_data_from_fn(&g, |x| [c(x[1]), c(0.0), c(0.0)]);
        let opts = SolveOpts { check_resonance: true, ..Default::default() };
        assert!(matches!(
            maxwell_forward_solve(g, &mu, &gamma, omega_res, &data, &opts),
            Err(ForwardError::NearResonance(_))
        ));
    }
}
