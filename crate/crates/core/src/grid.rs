//! Uniform node-indexed grids and complex scalar/vector/8-component fields.
//!
//! All fields in the crate live on a [`Grid3`]: an axis-aligned lattice of
//! `n[0] * n[1] * n[2]` nodes with spacing `h`, stored x-fastest. Arithmetic
//! between fields requires identical grids.

use num_complex::Complex64;
use std::io::{Read, Write};

use crate::error::FieldError;

/// Complex sample type used throughout.
pub type C64 = Complex64;

/// Axis-aligned uniform grid of nodes.
///
/// Node `(i, j, k)` sits at `origin + (i h0, j h1, k h2)`. The closed box
/// spanned by the nodes has extent `(n - 1) * h` per axis; when a grid is
/// used periodically (FFT work boxes) the period is `n * h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid3 {
    pub n: [usize; 3],
    pub origin: [f64; 3],
    pub h: [f64; 3],
}

impl Grid3 {
    /// Grid covering the closed box `[lo, hi]` with `n` nodes per axis,
    /// boundary nodes on the box faces.
    pub fn from_box(lo: [f64; 3], hi: [f64; 3], n: [usize; 3]) -> Self {
        assert!(n.iter().all(|&m| m >= 2), "need at least 2 nodes per axis");
        let h = [
            (hi[0] - lo[0]) / (n[0] - 1) as f64,
            (hi[1] - lo[1]) / (n[1] - 1) as f64,
            (hi[2] - lo[2]) / (n[2] - 1) as f64,
        ];
        Grid3 { n, origin: lo, h }
    }

    /// Cubic grid on `[lo, hi]` with `n` nodes per axis.
    pub fn cube(lo: f64, hi: f64, n: usize) -> Self {
        Self::from_box([lo; 3], [hi; 3], [n; 3])
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.n[1] + j) * self.n[0] + i
    }

    #[inline]
    pub fn coord(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [
            self.origin[0] + i as f64 * self.h[0],
            self.origin[1] + j as f64 * self.h[1],
            self.origin[2] + k as f64 * self.h[2],
        ]
    }

    /// Upper corner of the closed node box.
    pub fn hi(&self) -> [f64; 3] {
        [
            self.origin[0] + (self.n[0] - 1) as f64 * self.h[0],
            self.origin[1] + (self.n[1] - 1) as f64 * self.h[1],
            self.origin[2] + (self.n[2] - 1) as f64 * self.h[2],
        ]
    }

    /// Cell volume `h0 h1 h2`.
    pub fn cell_volume(&self) -> f64 {
        self.h[0] * self.h[1] * self.h[2]
    }

    /// Trapezoid quadrature weight of node `(i, j, k)` (without the `h^3`).
    #[inline]
    pub fn trapezoid_weight(&self, i: usize, j: usize, k: usize) -> f64 {
        let w = |m: usize, n: usize| if m == 0 || m == n - 1 { 0.5 } else { 1.0 };
        w(i, self.n[0]) * w(j, self.n[1]) * w(k, self.n[2])
    }

    /// Iterate over all node indices `(i, j, k)` x-fastest.
    pub fn iter_nodes(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let n = self.n;
        (0..n[2]).flat_map(move |k| (0..n[1]).flat_map(move |j| (0..n[0]).map(move |i| (i, j, k))))
    }

    pub fn same_layout(&self, other: &Grid3) -> Result<(), FieldError> {
        if self.n != other.n
            || self
                .h
                .iter()
                .zip(other.h.iter())
                .any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1.0))
        {
            return Err(FieldError::GridMismatch);
        }
        Ok(())
    }
}

/// Complex scalar field sampled at grid nodes, x-fastest storage.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grid: Grid3,
    pub data: Vec<C64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid3) -> Self {
        ScalarField { data: vec![C64::new(0.0, 0.0); grid.len()], grid }
    }

    pub fn from_fn(grid: Grid3, f: impl Fn([f64; 3]) -> C64) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for (i, j, k) in grid.iter_nodes() {
            data.push(f(grid.coord(i, j, k)));
        }
        ScalarField { grid, data }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> C64 {
        self.data[self.grid.idx(i, j, k)]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize, k: usize) -> &mut C64 {
        &mut self.data[self.grid.idx(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: C64) {
        self.data[self.grid.idx(i, j, k)] = v;
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        ScalarField { grid: self.grid, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|v| s * v)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a * b)
    }

    pub fn zip(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        self.grid.same_layout(&other.grid).expect("field grid mismatch");
        ScalarField {
            grid: self.grid,
            data: self.data.iter().zip(other.data.iter()).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Trapezoid-quadrature L2 norm over the node box.
    pub fn l2(&self) -> f64 {
        self.inner(self).re.max(0.0).sqrt()
    }

    /// Trapezoid-quadrature inner product `\int f \bar g`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.grid.same_layout(&other.grid).expect("field grid mismatch");
        let mut acc = C64::new(0.0, 0.0);
        for (i, j, k) in self.grid.iter_nodes() {
            let w = self.grid.trapezoid_weight(i, j, k);
            acc += w * self.at(i, j, k) * other.at(i, j, k).conj();
        }
        acc * self.grid.cell_volume()
    }

    pub fn linf(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Complex 3-vector field; components stored as separate scalar volumes.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub grid: Grid3,
    pub comp: [Vec<C64>; 3],
}

impl VectorField {
    pub fn zeros(grid: Grid3) -> Self {
        let z = vec![C64::new(0.0, 0.0); grid.len()];
        VectorField { grid, comp: [z.clone(), z.clone(), z] }
    }

    pub fn from_fn(grid: Grid3, f: impl Fn([f64; 3]) -> [C64; 3]) -> Self {
        let mut out = Self::zeros(grid);
        for (i, j, k) in grid.iter_nodes() {
            let v = f(grid.coord(i, j, k));
            let idx = grid.idx(i, j, k);
            for c in 0..3 {
                out.comp[c][idx] = v[c];
            }
        }
        out
    }

    pub fn from_scalars(x: ScalarField, y: ScalarField, z: ScalarField) -> Self {
        x.grid.same_layout(&y.grid).expect("field grid mismatch");
        x.grid.same_layout(&z.grid).expect("field grid mismatch");
        VectorField { grid: x.grid, comp: [x.data, y.data, z.data] }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> [C64; 3] {
        let idx = self.grid.idx(i, j, k);
        [self.comp[0][idx], self.comp[1][idx], self.comp[2][idx]]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: [C64; 3]) {
        let idx = self.grid.idx(i, j, k);
        for c in 0..3 {
            self.comp[c][idx] = v[c];
        }
    }

    pub fn component(&self, c: usize) -> ScalarField {
        ScalarField { grid: self.grid, data: self.comp[c].clone() }
    }

    pub fn map(&self, f: impl Fn([C64; 3]) -> [C64; 3]) -> Self {
        let mut out = Self::zeros(self.grid);
        for idx in 0..self.grid.len() {
            let v = f([self.comp[0][idx], self.comp[1][idx], self.comp[2][idx]]);
            for c in 0..3 {
                out.comp[c][idx] = v[c];
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2]])
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| [a[0] - b[0], a[1] - b[1], a[2] - b[2]])
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|a| [s * a[0], s * a[1], s * a[2]])
    }

    pub fn zip(&self, other: &Self, f: impl Fn([C64; 3], [C64; 3]) -> [C64; 3]) -> Self {
        self.grid.same_layout(&other.grid).expect("field grid mismatch");
        let mut out = Self::zeros(self.grid);
        for idx in 0..self.grid.len() {
            let a = [self.comp[0][idx], self.comp[1][idx], self.comp[2][idx]];
            let b = [other.comp[0][idx], other.comp[1][idx], other.comp[2][idx]];
            let v = f(a, b);
            for c in 0..3 {
                out.comp[c][idx] = v[c];
            }
        }
        out
    }

    pub fn l2(&self) -> f64 {
        (0..3).map(|c| self.component(c).l2().powi(2)).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &Self) -> C64 {
        (0..3).map(|c| self.component(c).inner(&other.component(c))).sum()
    }

    pub fn linf(&self) -> f64 {
        self.comp
            .iter()
            .flat_map(|c| c.iter())
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }
}

/// The 8-component state `(f1, u1, f2, u2)` of the augmented/rescaled systems.
///
/// For a lifted genuine Maxwell solution the scalar slots `f1`, `f2` vanish
/// identically.
#[derive(Debug, Clone)]
pub struct AugmentedField {
    pub f1: ScalarField,
    pub u1: VectorField,
    pub f2: ScalarField,
    pub u2: VectorField,
}

impl AugmentedField {
    pub fn zeros(grid: Grid3) -> Self {
        AugmentedField {
            f1: ScalarField::zeros(grid),
            u1: VectorField::zeros(grid),
            f2: ScalarField::zeros(grid),
            u2: VectorField::zeros(grid),
        }
    }

    pub fn grid(&self) -> Grid3 {
        self.f1.grid
    }

    pub fn from_fn(grid: Grid3, f: impl Fn([f64; 3]) -> [C64; 8]) -> Self {
        let mut out = Self::zeros(grid);
        for (i, j, k) in grid.iter_nodes() {
            let v = f(grid.coord(i, j, k));
            out.set(i, j, k, v);
        }
        out
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> [C64; 8] {
        let u1 = self.u1.at(i, j, k);
        let u2 = self.u2.at(i, j, k);
        [
            self.f1.at(i, j, k),
            u1[0],
            u1[1],
            u1[2],
            self.f2.at(i, j, k),
            u2[0],
            u2[1],
            u2[2],
        ]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: [C64; 8]) {
        *self.f1.at_mut(i, j, k) = v[0];
        self.u1.set(i, j, k, [v[1], v[2], v[3]]);
        *self.f2.at_mut(i, j, k) = v[4];
        self.u2.set(i, j, k, [v[5], v[6], v[7]]);
    }

    pub fn add(&self, other: &Self) -> Self {
        AugmentedField {
            f1: self.f1.add(&other.f1),
            u1: self.u1.add(&other.u1),
            f2: self.f2.add(&other.f2),
            u2: self.u2.add(&other.u2),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        AugmentedField {
            f1: self.f1.sub(&other.f1),
            u1: self.u1.sub(&other.u1),
            f2: self.f2.sub(&other.f2),
            u2: self.u2.sub(&other.u2),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        AugmentedField {
            f1: self.f1.scale(s),
            u1: self.u1.scale(s),
            f2: self.f2.scale(s),
            u2: self.u2.scale(s),
        }
    }

    /// Componentwise `\int Y \bar Z` over the node box (the 8-slot pairing).
    pub fn inner(&self, other: &Self) -> C64 {
        self.f1.inner(&other.f1)
            + self.u1.inner(&other.u1)
            + self.f2.inner(&other.f2)
            + self.u2.inner(&other.u2)
    }

    pub fn l2(&self) -> f64 {
        self.inner(self).re.max(0.0).sqrt()
    }

    pub fn linf(&self) -> f64 {
        self.f1
            .linf()
            .max(self.u1.linf())
            .max(self.f2.linf())
            .max(self.u2.linf())
    }

    /// All 8 components as scalar fields, in slot order.
    pub fn components(&self) -> [ScalarField; 8] {
        [
            self.f1.clone(),
            self.u1.component(0),
            self.u1.component(1),
            self.u1.component(2),
            self.f2.clone(),
            self.u2.component(0),
            self.u2.component(1),
            self.u2.component(2),
        ]
    }

    pub fn from_components(grid: Grid3, comps: [ScalarField; 8]) -> Self {
        let [c0, c1, c2, c3, c4, c5, c6, c7] = comps;
        AugmentedField {
            f1: c0,
            u1: VectorField::from_scalars(c1, c2, c3),
            f2: c4,
            u2: VectorField::from_scalars(c5, c6, c7),
        }
        .assert_grid(grid)
    }

    fn assert_grid(self, grid: Grid3) -> Self {
        self.f1.grid.same_layout(&grid).expect("field grid mismatch");
        self
    }
}

const SNAPSHOT_MAGIC: &[u8; 4] = b"EMF1";

/// Write a multi-component field snapshot in the raw format: magic, dims,
/// component count, spacing `h0` as f64, then per component the complex
/// samples as little-endian f64 pairs in x-fastest order.
pub fn write_snapshot<W: Write>(
    mut w: W,
    grid: &Grid3,
    components: &[&[C64]],
) -> std::io::Result<()> {
    w.write_all(SNAPSHOT_MAGIC)?;
    for d in grid.n {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    w.write_all(&(components.len() as u32).to_le_bytes())?;
    w.write_all(&grid.h[0].to_le_bytes())?;
    for comp in components {
        assert_eq!(comp.len(), grid.len());
        for v in comp.iter() {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Read a snapshot written by [`write_snapshot`]. Returns dims, spacing and
/// the component volumes.
pub fn read_snapshot<R: Read>(mut r: R) -> Result<([usize; 3], f64, Vec<Vec<C64>>), FieldError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(FieldError::SnapshotIo)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(FieldError::SnapshotFormat("bad magic".into()));
    }
    let mut u32buf = [0u8; 4];
    let mut dims = [0usize; 3];
    for d in dims.iter_mut() {
        r.read_exact(&mut u32buf).map_err(FieldError::SnapshotIo)?;
        *d = u32::from_le_bytes(u32buf) as usize;
    }
    r.read_exact(&mut u32buf).map_err(FieldError::SnapshotIo)?;
    let ncomp = u32::from_le_bytes(u32buf) as usize;
    let mut f64buf = [0u8; 8];
    r.read_exact(&mut f64buf).map_err(FieldError::SnapshotIo)?;
    let h = f64::from_le_bytes(f64buf);
    let len = dims[0] * dims[1] * dims[2];
    let mut comps = Vec::with_capacity(ncomp);
    for _ in 0..ncomp {
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            r.read_exact(&mut f64buf).map_err(FieldError::SnapshotIo)?;
            let re = f64::from_le_bytes(f64buf);
            r.read_exact(&mut f64buf).map_err(FieldError::SnapshotIo)?;
            let im = f64::from_le_bytes(f64buf);
            data.push(C64::new(re, im));
        }
        comps.push(data);
    }
    Ok((dims, h, comps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_coords_and_extent() {
        let g = Grid3::cube(0.0, 1.0, 5);
        assert_eq!(g.h[0], 0.25);
        assert_eq!(g.coord(4, 0, 0)[0], 1.0);
        assert_eq!(g.hi(), [1.0, 1.0, 1.0]);
    }

    #[test]
    fn trapezoid_l2_of_constant() {
        let g = Grid3::cube(0.0, 2.0, 9);
        let f = ScalarField::from_fn(g, |_| C64::new(3.0, 0.0));
        // volume 8, so L2 = 3 * sqrt(8)
        assert!((f.l2() - 3.0 * 8.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn snapshot_roundtrip() {
        let g = Grid3::cube(0.0, 1.0, 4);
        let f = ScalarField::from_fn(g, |x| C64::new(x[0], x[1] - x[2]));
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &g, &[&f.data]).unwrap();
        let (dims, h, comps) = read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(dims, [4, 4, 4]);
        assert!((h - g.h[0]).abs() < 1e-15);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0], f.data);
    }
}
