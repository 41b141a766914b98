//! Finite-difference differential operators.
//!
//! Second-order centered stencils at interior nodes and second-order
//! one-sided stencils in the boundary layer, so every operator is defined on
//! the full node box:
//!
//! ```text
//!   f'(x)  ~ (f_{+1} - f_{-1}) / 2h                    (centered)
//!   f'(x)  ~ (-3 f_0 + 4 f_1 - f_2) / 2h               (one-sided)
//!   f''(x) ~ (f_{+1} - 2 f_0 + f_{-1}) / h^2           (centered)
//!   f''(x) ~ (2 f_0 - 5 f_1 + 4 f_2 - f_3) / h^2       (one-sided)
//! ```

use crate::grid::{ScalarField, VectorField, C64};

/// First partial derivative along `axis` (0, 1 or 2).
pub fn partial(f: &ScalarField, axis: usize) -> ScalarField {
    let g = f.grid;
    let n = g.n[axis];
    assert!(n >= 3, "need at least 3 nodes along axis for derivatives");
    let h = g.h[axis];
    let mut out = ScalarField::zeros(g);
    let step = match axis {
        0 => 1,
        1 => g.n[0],
        2 => g.n[0] * g.n[1],
        _ => panic!("axis out of range"),
    };
    for (i, j, k) in g.iter_nodes() {
        let pos = [i, j, k][axis];
        let idx = g.idx(i, j, k);
        let v = if pos == 0 {
            (-3.0 * f.data[idx] + 4.0 * f.data[idx + step] - f.data[idx + 2 * step]) / (2.0 * h)
        } else if pos == n - 1 {
            (3.0 * f.data[idx] - 4.0 * f.data[idx - step] + f.data[idx - 2 * step]) / (2.0 * h)
        } else {
            (f.data[idx + step] - f.data[idx - step]) / (2.0 * h)
        };
        out.data[idx] = v;
    }
    out
}

/// Second partial derivative along `axis`.
pub fn partial2(f: &ScalarField, axis: usize) -> ScalarField {
    let g = f.grid;
    let n = g.n[axis];
    assert!(n >= 4, "need at least 4 nodes along axis for second derivatives");
    let h2 = g.h[axis] * g.h[axis];
    let mut out = ScalarField::zeros(g);
    let step = match axis {
        0 => 1,
        1 => g.n[0],
        2 => g.n[0] * g.n[1],
        _ => panic!("axis out of range"),
    };
    for (i, j, k) in g.iter_nodes() {
        let pos = [i, j, k][axis];
        let idx = g.idx(i, j, k);
        let v = if pos == 0 {
            (2.0 * f.data[idx] - 5.0 * f.data[idx + step] + 4.0 * f.data[idx + 2 * step]
                - f.data[idx + 3 * step])
                / h2
        } else if pos == n - 1 {
            (2.0 * f.data[idx] - 5.0 * f.data[idx - step] + 4.0 * f.data[idx - 2 * step]
                - f.data[idx - 3 * step])
                / h2
        } else {
            (f.data[idx + step] - 2.0 * f.data[idx] + f.data[idx - step]) / h2
        };
        out.data[idx] = v;
    }
    out
}

/// Gradient of a scalar field.
pub fn grad(f: &ScalarField) -> VectorField {
    VectorField::from_scalars(partial(f, 0), partial(f, 1), partial(f, 2))
}

/// Divergence of a vector field.
pub fn div(u: &VectorField) -> ScalarField {
    let dx = partial(&u.component(0), 0);
    let dy = partial(&u.component(1), 1);
    let dz = partial(&u.component(2), 2);
    dx.add(&dy).add(&dz)
}

/// Curl of a vector field.
pub fn curl(u: &VectorField) -> VectorField {
    let u0 = u.component(0);
    let u1 = u.component(1);
    let u2 = u.component(2);
    let cx = partial(&u2, 1).sub(&partial(&u1, 2));
    let cy = partial(&u0, 2).sub(&partial(&u2, 0));
    let cz = partial(&u1, 0).sub(&partial(&u0, 1));
    VectorField::from_scalars(cx, cy, cz)
}

/// Laplacian of a scalar field.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    partial2(f, 0).add(&partial2(f, 1)).add(&partial2(f, 2))
}

/// Componentwise Laplacian of a vector field.
pub fn laplacian_vec(u: &VectorField) -> VectorField {
    VectorField::from_scalars(
        laplacian(&u.component(0)),
        laplacian(&u.component(1)),
        laplacian(&u.component(2)),
    )
}

/// Pointwise cross product of two vector samples.
#[inline]
pub fn cross(a: [C64; 3], b: [C64; 3]) -> [C64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Pointwise bilinear dot product (no conjugation) of two vector samples.
#[inline]
pub fn dot(a: [C64; 3], b: [C64; 3]) -> C64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid3;
    use num_complex::Complex64;

    fn c(x: f64) -> C64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn grad_of_linear_is_exact() {
        let g = Grid3::cube(0.0, 1.0, 8);
        let f = ScalarField::from_fn(g, |x| c(x[0]));
        let gr = grad(&f);
        for (i, j, k) in g.iter_nodes() {
            let v = gr.at(i, j, k);
            assert!((v[0] - c(1.0)).norm() < 1e-12);
            assert!(v[1].norm() < 1e-12 && v[2].norm() < 1e-12);
        }
    }

    #[test]
    fn curl_of_gradient_vanishes() {
        // Axis-wise difference stencils commute, so the discrete curl of a
        // discrete gradient is zero up to rounding — well inside the C h^2
        // envelope at every tested resolution.
        let f_expr = |x: [f64; 3]| c((2.0 * x[0] + x[1]).sin() * (1.5 * x[2]).cos());
        for n in [16, 32, 64] {
            let g = Grid3::cube(0.0, 1.0, n);
            let f = ScalarField::from_fn(g, f_expr);
            let e = curl(&grad(&f)).linf();
            let h2 = (1.0 / (n as f64 - 1.0)).powi(2);
            assert!(e < 1e-9 && e < h2, "n = {n}, error = {e}");
        }
    }

    #[test]
    fn laplacian_of_sine_matches_analytic() {
        let g = Grid3::cube(0.0, 1.0, 65);
        let f = ScalarField::from_fn(g, |x| c((2.0 * std::f64::consts::PI * x[0]).sin()));
        let lap = laplacian(&f);
        let scale = 4.0 * std::f64::consts::PI * std::f64::consts::PI;
        let mut max_rel = 0.0f64;
        for (i, j, k) in g.iter_nodes() {
            let want = -scale * f.at(i, j, k);
            let got = lap.at(i, j, k);
            max_rel = max_rel.max((got - want).norm() / scale);
        }
        assert!(max_rel <= 1e-2, "max relative error {max_rel}");
    }
}
