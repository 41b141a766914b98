//! Suitable partially flat and partially spherical domains, the reflection
//! map `R` and the Kelvin transform `K`.
//!
//! Domains are rasterized on uniform axis-aligned grids; boundaries are
//! unions of grid faces (staircase Lipschitz at desk scale). A flat domain
//! is a box `U` below the plane `x3 = 0` whose inaccessible boundary part
//! Γ₀ is a union of rectangles on the top face; Γ is the rest of the
//! boundary. Its symmetric extension is `Ω = U ∪ Γ₀ ∪ R(U)` with
//! `R(x1, x2, x3) = (x1, x2, -x3)`.
//!
//! A spherical domain lives inside a ball `B(y0; r0)` whose boundary sphere
//! passes through the origin; it is always handled by mapping to the flat
//! case through the Kelvin transform `K(y) = r1^2 y / |y|^2`, `r1 = 2 r0`,
//! which is an involution fixing the sphere `|y| = r1` and satisfying the
//! conformal pull-back law `K* e = (r1^4 / |.|^4) e`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Grid3, ScalarField, VectorField, C64};
use crate::trace::{BoundaryTrace, BoxFace};

/// Errors raised while building domains or applying symmetrization maps.
#[derive(Debug, Error)]
pub enum GeometryError {
    /// The Γ₀ mask rasterizes to zero boundary nodes.
    #[error("gamma0 mask rasterizes to zero faces")]
    EmptyGamma0,
    /// The symmetric extension fails a suitability check.
    #[error("domain is not suitable: {0}")]
    NotSuitable(String),
    /// Spherical case: the origin does not lie on the sphere, or lies in the
    /// closure of the domain.
    #[error("origin must lie on the sphere S(y0; r0) and outside the closure of U")]
    OriginInClosure,
    /// A flat-only operation was invoked on a spherical domain.
    #[error("operation requires a flat domain")]
    NotFlat,
    /// A grid node maps too close to the Kelvin singularity at the origin.
    #[error("grid node within {0:.3e} of the Kelvin singularity")]
    SingularPoint(f64),
}

/// Axis-aligned rectangle in the Γ₀ plane coordinates `(x1, x2)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Rect2 {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl Rect2 {
    pub fn contains(&self, x1: f64, x2: f64) -> bool {
        x1 >= self.lo[0] && x1 <= self.hi[0] && x2 >= self.lo[1] && x2 <= self.hi[1]
    }
}

/// Flat-domain specification: a box with top face on `x3 = 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlatSpec {
    pub box_lo: [f64; 3],
    pub box_hi: [f64; 3],
    /// Nodes per axis on the `U` grid.
    pub resolution: [usize; 3],
    /// Γ₀ rectangles in `(x1, x2)` plane coordinates on the top face.
    pub gamma0: Vec<Rect2>,
}

/// Spherical-domain specification: sphere through the origin plus the flat
/// image of the domain under the Kelvin transform.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SphericalSpec {
    /// Ball center; must satisfy `|y0| = r0` so the origin lies on the sphere.
    pub y0: [f64; 3],
    pub r0: f64,
    /// Flat image `K(U)` (after rotating `y0` onto `-r0 e3` and translating
    /// the image plane `x3 = -2 r0` up to `x3 = 0`).
    pub image: FlatSpec,
}

/// Domain specification file content.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    Flat(FlatSpec),
    Spherical(SphericalSpec),
}

/// The Kelvin map bundle for a spherical domain: rotation taking `y0` to
/// `-r0 e3`, the inversion `K`, and the translation lifting the image plane
/// to `x3 = 0`.
#[derive(Debug, Clone)]
pub struct KelvinMap {
    pub y0: [f64; 3],
    pub r0: f64,
    pub r1: f64,
    /// Rotation matrix with `rot * y0 = -r0 e3` (rows are the new axes).
    rot: [[f64; 3]; 3],
}

fn matvec(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

fn matvec_t(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
        m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
        m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2],
    ]
}

impl KelvinMap {
    fn new(y0: [f64; 3], r0: f64) -> Self {
        // Rodrigues rotation taking a = y0/r0 onto b = -e3.
        let a = [y0[0] / r0, y0[1] / r0, y0[2] / r0];
        let b = [0.0, 0.0, -1.0];
        let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        let rot = if dot > 1.0 - 1e-14 {
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
        } else if dot < -1.0 + 1e-14 {
            // a = +e3: rotate pi about e1.
            [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]]
        } else {
            let v = [
                a[1] * b[2] - a[2] * b[1],
                a[2] * b[0] - a[0] * b[2],
                a[0] * b[1] - a[1] * b[0],
            ];
            let c = dot;
            let k = 1.0 / (1.0 + c);
            // R = I + [v]_x + [v]_x^2 / (1 + c), acting as column-vector matrix.
            [
                [c + v[0] * v[0] * k, -v[2] + v[0] * v[1] * k, v[1] + v[0] * v[2] * k],
                [v[2] + v[1] * v[0] * k, c + v[1] * v[1] * k, -v[0] + v[1] * v[2] * k],
                [-v[1] + v[2] * v[0] * k, v[0] + v[2] * v[1] * k, c + v[2] * v[2] * k],
            ]
        };
        KelvinMap { y0, r0, r1: 2.0 * r0, rot }
    }

    /// Inversion `K(p) = r1^2 p / |p|^2` in the rotated frame.
    fn invert(&self, p: [f64; 3]) -> [f64; 3] {
        let n2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
        let s = self.r1 * self.r1 / n2;
        [s * p[0], s * p[1], s * p[2]]
    }

    /// Map a physical point `y` (sphere side) to flat coordinates `x`.
    pub fn to_flat(&self, y: [f64; 3]) -> [f64; 3] {
        let yr = matvec(&self.rot, y);
        let x = self.invert(yr);
        [x[0], x[1], x[2] + 2.0 * self.r0]
    }

    /// Map a flat-coordinate point `x` back to the sphere side.
    pub fn to_sphere(&self, x: [f64; 3]) -> [f64; 3] {
        let xk = [x[0], x[1], x[2] - 2.0 * self.r0];
        let yr = self.invert(xk);
        matvec_t(&self.rot, yr)
    }

    /// Pre-rotation Kelvin coordinate of a flat point (used by the conformal
    /// factor).
    fn kelvin_coord(&self, x: [f64; 3]) -> [f64; 3] {
        [x[0], x[1], x[2] - 2.0 * self.r0]
    }

    /// Conformal coefficient factor `r1^2 / |x_K|^2` at a flat point `x`.
    pub fn conformal_factor(&self, x: [f64; 3]) -> f64 {
        let k = self.kelvin_coord(x);
        let n2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        self.r1 * self.r1 / n2
    }

    /// Jacobian of the inversion at the pre-rotation Kelvin coordinate of a
    /// flat point: `DK = (r1^2/|p|^2)(I - 2 p̂ p̂^t)`.
    fn inversion_jacobian(&self, p: [f64; 3]) -> [[f64; 3]; 3] {
        let n2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
        let s = self.r1 * self.r1 / n2;
        let mut j = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                let id = if a == b { 1.0 } else { 0.0 };
                j[a][b] = s * (id - 2.0 * p[a] * p[b] / n2);
            }
        }
        j
    }

    /// Pull a 1-form (vector proxy) on the sphere side back to flat
    /// coordinates: `(Φ* u)_x = DΦ(x)^t u_{Φ(x)}` with `Φ = to_sphere`.
    ///
    /// `u` is a closed-form field on the sphere side; the result is sampled
    /// on `grid` (flat coordinates).
    pub fn pullback_form(
        &self,
        grid: Grid3,
        u: impl Fn([f64; 3]) -> [C64; 3],
    ) -> Result<VectorField, GeometryError> {
        let eps = 1e-6 * self.r1;
        let mut out = VectorField::zeros(grid);
        for (i, j, k) in grid.iter_nodes() {
            let x = grid.coord(i, j, k);
            let xk = self.kelvin_coord(x);
            let nk = (xk[0] * xk[0] + xk[1] * xk[1] + xk[2] * xk[2]).sqrt();
            if nk < eps {
                return Err(GeometryError::SingularPoint(nk));
            }
            let y = self.to_sphere(x);
            let uy = u(y);
            // DΦ(x) = rot^t ∘ DK(x_K); transpose is DK(x_K)^t ∘ rot = DK ∘ rot
            // since DK is symmetric.
            let dk = self.inversion_jacobian(xk);
            // v = DK * (rot * ... ) — careful with order: Φ = rot^t ∘ K ∘ T,
            // DΦ = rot^t DK, DΦ^t = DK^t rot = DK rot.
            let mut v = [Complex64::new(0.0, 0.0); 3];
            // First apply rot to u (real matrix times complex vector).
            let ur = [
                Complex64::new(self.rot[0][0], 0.0) * uy[0]
                    + Complex64::new(self.rot[0][1], 0.0) * uy[1]
                    + Complex64::new(self.rot[0][2], 0.0) * uy[2],
                Complex64::new(self.rot[1][0], 0.0) * uy[0]
                    + Complex64::new(self.rot[1][1], 0.0) * uy[1]
                    + Complex64::new(self.rot[1][2], 0.0) * uy[2],
                Complex64::new(self.rot[2][0], 0.0) * uy[0]
                    + Complex64::new(self.rot[2][1], 0.0) * uy[1]
                    + Complex64::new(self.rot[2][2], 0.0) * uy[2],
            ];
            for a in 0..3 {
                v[a] = Complex64::new(dk[a][0], 0.0) * ur[0]
                    + Complex64::new(dk[a][1], 0.0) * ur[1]
                    + Complex64::new(dk[a][2], 0.0) * ur[2];
            }
            out.set(i, j, k, v);
        }
        Ok(out)
    }

    /// Pull a scalar coefficient back to flat coordinates: `γ̃ = γ ∘ Φ`.
    pub fn pullback_coefficient(
        &self,
        grid: Grid3,
        gamma: impl Fn([f64; 3]) -> C64,
    ) -> ScalarField {
        ScalarField::from_fn(grid, |x| gamma(self.to_sphere(x)))
    }
}

/// A validated, rasterized domain with its symmetric extension.
#[derive(Debug, Clone)]
pub struct ValidatedDomain {
    /// Grid over the (image) flat domain `Ū`; top face on `x3 = 0`.
    pub u_grid: Grid3,
    /// Grid over the symmetric extension `Ω̄` (odd node count along `x3`, so
    /// the plane `x3 = 0` is a node plane and reflection is node-exact).
    pub omega_grid: Grid3,
    /// Γ₀ rectangles on the top face.
    pub gamma0: Vec<Rect2>,
    /// Kelvin bundle for spherical domains; `None` for flat ones.
    pub kelvin: Option<KelvinMap>,
}

/// Validate and rasterize a domain specification.
pub fn build_domain(spec: &DomainSpec) -> Result<ValidatedDomain, GeometryError> {
    match spec {
        DomainSpec::Flat(flat) => build_flat(flat, None),
        DomainSpec::Spherical(sph) => {
            if (norm3(sph.y0) - sph.r0).abs() > 1e-10 * sph.r0 {
                // Origin not on the sphere: the configuration places the
                // origin inside/outside the closure instead.
                return Err(GeometryError::OriginInClosure);
            }
            let kelvin = KelvinMap::new(sph.y0, sph.r0);
            build_flat(&sph.image, Some(kelvin))
        }
    }
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn build_flat(
    flat: &FlatSpec,
    kelvin: Option<KelvinMap>,
) -> Result<ValidatedDomain, GeometryError> {
    if flat.box_hi[2].abs() > 1e-12 {
        return Err(GeometryError::NotSuitable(
            "flat domain must have its top face on the plane x3 = 0".into(),
        ));
    }
    if flat.box_lo[2] >= 0.0 {
        return Err(GeometryError::NotSuitable("U must lie below the plane x3 = 0".into()));
    }
    if flat.resolution.iter().any(|&n| n < 8) {
        return Err(GeometryError::NotSuitable("resolution must be >= 8 nodes per axis".into()));
    }
    let u_grid = Grid3::from_box(flat.box_lo, flat.box_hi, flat.resolution);
    // Γ₀ must rasterize to at least one top-face node and stay within the face.
    let top = BoxFace { axis: 2, side: 1 };
    let dims = top.dims(&u_grid);
    let mut count = 0usize;
    for q in 0..dims[1] {
        for p in 0..dims[0] {
            let (i, j, k) = top.node3(&u_grid, p, q);
            let x = u_grid.coord(i, j, k);
            if flat.gamma0.iter().any(|r| r.contains(x[0], x[1])) {
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(GeometryError::EmptyGamma0);
    }
    for r in &flat.gamma0 {
        if r.lo[0] < flat.box_lo[0] - 1e-12
            || r.hi[0] > flat.box_hi[0] + 1e-12
            || r.lo[1] < flat.box_lo[1] - 1e-12
            || r.hi[1] > flat.box_hi[1] + 1e-12
        {
            return Err(GeometryError::NotSuitable(
                "gamma0 rectangle extends beyond the top face".into(),
            ));
        }
    }
    // Symmetric extension: same box mirrored through x3 = 0; odd node count
    // so reflection permutes nodes exactly.
    let nz = flat.resolution[2];
    let omega_grid = Grid3::from_box(
        flat.box_lo,
        [flat.box_hi[0], flat.box_hi[1], -flat.box_lo[2]],
        [flat.resolution[0], flat.resolution[1], 2 * nz - 1],
    );
    if kelvin.is_some() {
        // Every flat node must stay clear of the Kelvin singularity; the
        // image plane sits at distance 2 r0 from it, so this is a guard
        // against malformed boxes above the plane.
        let km = kelvin.as_ref().unwrap();
        let eps = 1e-6 * km.r1;
        for (i, j, k) in omega_grid.iter_nodes() {
            let x = omega_grid.coord(i, j, k);
            let xk = km.kelvin_coord(x);
            if norm3(xk) < eps {
                return Err(GeometryError::SingularPoint(norm3(xk)));
            }
        }
    }
    Ok(ValidatedDomain { u_grid, omega_grid, gamma0: flat.gamma0.clone(), kelvin })
}

impl ValidatedDomain {
    pub fn is_flat(&self) -> bool {
        self.kelvin.is_none()
    }

    /// Is the plane point `(x1, x2)` inside Γ₀?
    pub fn in_gamma0(&self, x1: f64, x2: f64) -> bool {
        self.gamma0.iter().any(|r| r.contains(x1, x2))
    }

    /// Tag Γ₀ nodes on a boundary trace over the `U` box (Γ₀ lives on the
    /// top face only).
    pub fn tag_gamma0(&self, trace: &mut BoundaryTrace) {
        for f in &mut trace.faces {
            if f.face.axis != 2 || f.face.side != 1 {
                continue;
            }
            for q in 0..f.n[1] {
                for p in 0..f.n[0] {
                    let (i, j, k) = f.face.node3(&self.u_grid, p, q);
                    let x = self.u_grid.coord(i, j, k);
                    f.gamma0[q * f.n[0] + p] = self.in_gamma0(x[0], x[1]);
                }
            }
        }
    }

    /// Reflection of a point through `x3 = 0`.
    pub fn reflect_point(&self, x: [f64; 3]) -> Result<[f64; 3], GeometryError> {
        if !self.is_flat() {
            return Err(GeometryError::NotFlat);
        }
        Ok([x[0], x[1], -x[2]])
    }

    /// Node index of the reflection of node `k3` along the third axis of the
    /// Ω grid (node-exact by construction).
    #[inline]
    pub fn reflect_k(&self, k: usize) -> usize {
        self.omega_grid.n[2] - 1 - k
    }

    /// `g(x) = f(R(x))` for a scalar field on the Ω grid.
    pub fn reflect_scalar(&self, f: &ScalarField) -> Result<ScalarField, GeometryError> {
        if !self.is_flat() {
            return Err(GeometryError::NotFlat);
        }
        let g = self.omega_grid;
        f.grid.same_layout(&g).expect("field must live on the omega grid");
        let mut out = ScalarField::zeros(g);
        for (i, j, k) in g.iter_nodes() {
            *out.at_mut(i, j, k) = f.at(i, j, self.reflect_k(k));
        }
        Ok(out)
    }

    /// `v_x = R_* u_{R(x)}` for a vector field on the Ω grid.
    pub fn reflect_vector(&self, u: &VectorField) -> Result<VectorField, GeometryError> {
        if !self.is_flat() {
            return Err(GeometryError::NotFlat);
        }
        let g = self.omega_grid;
        u.grid.same_layout(&g).expect("field must live on the omega grid");
        let mut out = VectorField::zeros(g);
        for (i, j, k) in g.iter_nodes() {
            let v = u.at(i, j, self.reflect_k(k));
            out.set(i, j, k, [v[0], v[1], -v[2]]);
        }
        Ok(out)
    }
}
