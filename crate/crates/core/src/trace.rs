//! Boundary traces on rasterized box domains.
//!
//! Boundaries are unions of the six axis-aligned faces of the node box.
//! The tangential trace of a vector field is `N x u` on each face; the
//! surface divergence of that trace is `Div(N x u) = -<N, curl u>`,
//! evaluated with the one-sided stencils of [`crate::diff`].
//!
//! The discrete `TH` norm combines facet-wise `B^{-1/2}` norms of the trace
//! components and of the surface divergence (combination constant 1, in
//! root-sum-square form so the norm is Hilbertian and distance computations
//! reduce to least squares).

use num_complex::Complex64;

use crate::diff;
use crate::grid::{Grid3, VectorField, C64};
use crate::norms::{besov_facet, besov_facet_embed};

/// One of the six faces of the node box: `axis` is the normal direction and
/// `side` is 0 (low face) or 1 (high face).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoxFace {
    pub axis: usize,
    pub side: usize,
}

impl BoxFace {
    pub fn all() -> [BoxFace; 6] {
        [
            BoxFace { axis: 0, side: 0 },
            BoxFace { axis: 0, side: 1 },
            BoxFace { axis: 1, side: 0 },
            BoxFace { axis: 1, side: 1 },
            BoxFace { axis: 2, side: 0 },
            BoxFace { axis: 2, side: 1 },
        ]
    }

    /// The two tangential axes in increasing order.
    pub fn tangential_axes(&self) -> [usize; 2] {
        match self.axis {
            0 => [1, 2],
            1 => [0, 2],
            2 => [0, 1],
            _ => panic!("axis out of range"),
        }
    }

    /// Outward unit normal of the face.
    pub fn normal(&self) -> [f64; 3] {
        let sign = if self.side == 1 { 1.0 } else { -1.0 };
        let mut n = [0.0; 3];
        n[self.axis] = sign;
        n
    }

    /// Node counts along the tangential axes.
    pub fn dims(&self, g: &Grid3) -> [usize; 2] {
        let t = self.tangential_axes();
        [g.n[t[0]], g.n[t[1]]]
    }

    /// Spacings along the tangential axes.
    pub fn spacing(&self, g: &Grid3) -> [f64; 2] {
        let t = self.tangential_axes();
        [g.h[t[0]], g.h[t[1]]]
    }

    /// 3-D node index of face node `(p, q)` (tangential coordinates).
    pub fn node3(&self, g: &Grid3, p: usize, q: usize) -> (usize, usize, usize) {
        let t = self.tangential_axes();
        let fixed = if self.side == 1 { g.n[self.axis] - 1 } else { 0 };
        let mut ijk = [0usize; 3];
        ijk[self.axis] = fixed;
        ijk[t[0]] = p;
        ijk[t[1]] = q;
        (ijk[0], ijk[1], ijk[2])
    }
}

/// Tangential vector samples and surface-divergence samples on one face.
#[derive(Debug, Clone)]
pub struct FaceTrace {
    pub face: BoxFace,
    pub n: [usize; 2],
    pub h: [f64; 2],
    /// Tangential vector samples (full 3-vectors; the normal component is
    /// zero by construction), x-fastest in `(p, q)`.
    pub vec: Vec<[C64; 3]>,
    /// Surface divergence samples.
    pub div: Vec<C64>,
    /// Per-node flag: does this node belong to the inaccessible part Γ₀?
    pub gamma0: Vec<bool>,
}

impl FaceTrace {
    fn zeros(face: BoxFace, g: &Grid3) -> Self {
        let n = face.dims(g);
        let len = n[0] * n[1];
        FaceTrace {
            face,
            n,
            h: face.spacing(g),
            vec: vec![[Complex64::new(0.0, 0.0); 3]; len],
            div: vec![Complex64::new(0.0, 0.0); len],
            gamma0: vec![false; len],
        }
    }

    fn component(&self, c: usize) -> Vec<C64> {
        self.vec.iter().map(|v| v[c]).collect()
    }
}

/// Face-indexed tangential trace of a vector field over the whole box
/// boundary, with surface divergences.
#[derive(Debug, Clone)]
pub struct BoundaryTrace {
    pub faces: Vec<FaceTrace>,
}

impl BoundaryTrace {
    /// Tangential trace `N x u` of `u` on every box face, with the surface
    /// divergence `-<N, curl u>` evaluated one-sided at the boundary.
    pub fn tangential(u: &VectorField) -> Self {
        let g = u.grid;
        let curl = diff::curl(u);
        let faces = BoxFace::all()
            .into_iter()
            .map(|face| {
                let mut ft = FaceTrace::zeros(face, &g);
                let nrm = face.normal();
                let nrm_c = [
                    Complex64::new(nrm[0], 0.0),
                    Complex64::new(nrm[1], 0.0),
                    Complex64::new(nrm[2], 0.0),
                ];
                for q in 0..ft.n[1] {
                    for p in 0..ft.n[0] {
                        let (i, j, k) = face.node3(&g, p, q);
                        let idx = q * ft.n[0] + p;
                        ft.vec[idx] = diff::cross(nrm_c, u.at(i, j, k));
                        let c = curl.at(i, j, k);
                        ft.div[idx] =
                            -(nrm_c[0] * c[0] + nrm_c[1] * c[1] + nrm_c[2] * c[2]);
                    }
                }
                ft
            })
            .collect();
        BoundaryTrace { faces }
    }

    pub fn zeros_like(&self) -> Self {
        let faces = self
            .faces
            .iter()
            .map(|f| FaceTrace {
                face: f.face,
                n: f.n,
                h: f.h,
                vec: vec![[Complex64::new(0.0, 0.0); 3]; f.vec.len()],
                div: vec![Complex64::new(0.0, 0.0); f.div.len()],
                gamma0: f.gamma0.clone(),
            })
            .collect();
        BoundaryTrace { faces }
    }

    pub fn map_zip(&self, other: &Self, op: impl Fn(C64, C64) -> C64) -> Self {
        let faces = self
            .faces
            .iter()
            .zip(other.faces.iter())
            .map(|(a, b)| {
                assert_eq!(a.n, b.n, "face layout mismatch");
                FaceTrace {
                    face: a.face,
                    n: a.n,
                    h: a.h,
                    vec: a
                        .vec
                        .iter()
                        .zip(b.vec.iter())
                        .map(|(x, y)| [op(x[0], y[0]), op(x[1], y[1]), op(x[2], y[2])])
                        .collect(),
                    div: a.div.iter().zip(b.div.iter()).map(|(x, y)| op(*x, *y)).collect(),
                    gamma0: a.gamma0.clone(),
                }
            })
            .collect();
        BoundaryTrace { faces }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.map_zip(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.map_zip(other, |a, b| a + b)
    }

    pub fn scale(&self, s: C64) -> Self {
        let faces = self
            .faces
            .iter()
            .map(|f| FaceTrace {
                face: f.face,
                n: f.n,
                h: f.h,
                vec: f.vec.iter().map(|v| [s * v[0], s * v[1], s * v[2]]).collect(),
                div: f.div.iter().map(|v| s * v).collect(),
                gamma0: f.gamma0.clone(),
            })
            .collect();
        BoundaryTrace { faces }
    }

    /// Zero the trace (and its divergence) on Γ₀-flagged nodes, i.e. restrict
    /// to Γ and zero-extend.
    pub fn restricted_to_gamma(&self) -> Self {
        let faces = self
            .faces
            .iter()
            .map(|f| {
                let mut out = f.clone();
                for (idx, on_g0) in f.gamma0.iter().enumerate() {
                    if *on_g0 {
                        out.vec[idx] = [Complex64::new(0.0, 0.0); 3];
                        out.div[idx] = Complex64::new(0.0, 0.0);
                    }
                }
                out
            })
            .collect();
        BoundaryTrace { faces }
    }

    /// Largest sample magnitude over Γ₀ nodes (used for vanishing-trace
    /// assertions).
    pub fn linf_on_gamma0(&self) -> f64 {
        let mut m = 0.0f64;
        for f in &self.faces {
            for (idx, on_g0) in f.gamma0.iter().enumerate() {
                if *on_g0 {
                    for c in 0..3 {
                        m = m.max(f.vec[idx][c].norm());
                    }
                }
            }
        }
        m
    }

    pub fn linf(&self) -> f64 {
        let mut m = 0.0f64;
        for f in &self.faces {
            for v in &f.vec {
                for c in 0..3 {
                    m = m.max(v[c].norm());
                }
            }
        }
        m
    }

    /// Surface `L^2` norm of the tangential samples (trapezoid per facet).
    pub fn l2(&self) -> f64 {
        let mut acc = 0.0;
        for f in &self.faces {
            for q in 0..f.n[1] {
                for p in 0..f.n[0] {
                    let wq = if q == 0 || q == f.n[1] - 1 { 0.5 } else { 1.0 };
                    let wp = if p == 0 || p == f.n[0] - 1 { 0.5 } else { 1.0 };
                    let idx = q * f.n[0] + p;
                    let v = f.vec[idx];
                    acc += wp * wq * f.h[0] * f.h[1]
                        * (v[0].norm_sqr() + v[1].norm_sqr() + v[2].norm_sqr());
                }
            }
        }
        acc.max(0.0).sqrt()
    }

    /// Discrete `TH` norm: root-sum-square of facet-wise `B^{-1/2}` norms of
    /// the trace components and the surface divergence.
    pub fn th_norm(&self) -> f64 {
        let mut acc = 0.0;
        for f in &self.faces {
            for c in 0..3 {
                let b = besov_facet(&f.component(c), f.n, f.h, -0.5);
                acc += b * b;
            }
            let b = besov_facet(&f.div, f.n, f.h, -0.5);
            acc += b * b;
        }
        acc.sqrt()
    }

    /// `TH_0(Γ)` norm: `TH` norm of the zero-extension of the Γ-restricted
    /// trace over the whole boundary.
    pub fn th0_norm(&self) -> f64 {
        self.restricted_to_gamma().th_norm()
    }

    /// Hilbert-space embedding whose Euclidean norm equals [`th_norm`]:
    /// concatenated `B^{-1/2}`-weighted Fourier coefficients of all facet
    /// components and divergences.
    pub fn th_embed(&self) -> Vec<C64> {
        let mut out = Vec::new();
        for f in &self.faces {
            for c in 0..3 {
                out.extend(besov_facet_embed(&f.component(c), f.n, f.h, -0.5));
            }
            out.extend(besov_facet_embed(&f.div, f.n, f.h, -0.5));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid3, ScalarField};

    fn c(x: f64) -> C64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn constant_vertical_field_has_zero_trace_on_top() {
        // u = (0,0,1), top face N = (0,0,1): N x u = 0.
        let g = Grid3::cube(0.0, 1.0, 6);
        let u = VectorField::from_fn(g, |_| [c(0.0), c(0.0), c(1.0)]);
        let tr = BoundaryTrace::tangential(&u);
        let top = tr.faces.iter().find(|f| f.face.axis == 2 && f.face.side == 1).unwrap();
        for v in &top.vec {
            assert!(v[0].norm() + v[1].norm() + v[2].norm() < 1e-13);
        }
    }

    #[test]
    fn surface_divergence_of_gradient_trace_vanishes() {
        // u = grad f is curl-free; the discrete curl of the discrete gradient
        // is zero up to rounding, so Div(N x u) = -<N, curl u> ~ 0 well
        // inside the C h^2 envelope.
        let f_expr = |x: [f64; 3]| c((1.7 * x[0] - 0.6 * x[1]).sin() * (1.2 * x[2]).cos());
        for n in [16, 32, 64] {
            let g = Grid3::cube(0.0, 1.0, n);
            let f = ScalarField::from_fn(g, f_expr);
            let u = diff::grad(&f);
            let tr = BoundaryTrace::tangential(&u);
            let e = tr
                .faces
                .iter()
                .flat_map(|fc| fc.div.iter())
                .map(|v| v.norm())
                .fold(0.0, f64::max);
            let h2 = (1.0 / (n as f64 - 1.0)).powi(2);
            assert!(e < 1e-9 && e < h2, "n = {n}, error = {e}");
        }
    }

    #[test]
    fn plane_wave_trace_matches_analytic_cross_product() {
        let g = Grid3::cube(0.0, 1.0, 10);
        let kd = [2.0, 1.0, -1.5];
        let p = [c(1.0), c(0.5), c(-0.3)];
        let u = VectorField::from_fn(g, |x| {
            let ph = kd[0] * x[0] + kd[1] * x[1] + kd[2] * x[2];
            let e = Complex64::new(ph.cos(), ph.sin());
            [p[0] * e, p[1] * e, p[2] * e]
        });
        let tr = BoundaryTrace::tangential(&u);
        let top = tr.faces.iter().find(|f| f.face.axis == 2 && f.face.side == 1).unwrap();
        for q in 0..top.n[1] {
            for p_idx in 0..top.n[0] {
                let (i, j, k) = top.face.node3(&g, p_idx, q);
                let x = g.coord(i, j, k);
                let ph = kd[0] * x[0] + kd[1] * x[1] + kd[2] * x[2];
                let e = Complex64::new(ph.cos(), ph.sin());
                // N x u with N = e3: (-u2, u1, 0).
                let want = [-p[1] * e, p[0] * e, c(0.0)];
                let got = top.vec[q * top.n[0] + p_idx];
                for cix in 0..3 {
                    assert!((got[cix] - want[cix]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn th_embed_norm_matches_th_norm() {
        let g = Grid3::cube(0.0, 1.0, 8);
        let u = VectorField::from_fn(g, |x| {
            [c(x[0] * x[1]), c((x[2] - 0.3).powi(2)), c(x[0] + 0.1)]
        });
        let tr = BoundaryTrace::tangential(&u);
        let th = tr.th_norm();
        let en: f64 = tr.th_embed().iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        assert!((en - th).abs() < 1e-10 * th.max(1.0));
    }
}
