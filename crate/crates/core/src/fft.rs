//! Three-dimensional FFT helpers built on one-dimensional passes.
//!
//! Data layout is x-fastest, matching [`crate::grid`]. The transforms are
//! unnormalized in the forward direction; the inverse divides by the total
//! sample count, so `ifft3(fft3(f)) == f`.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// In-place forward 3-D FFT of `data` with dims `[n0, n1, n2]`, x-fastest.
pub fn fft3(data: &mut [Complex64], dims: [usize; 3]) {
    transform(data, dims, false);
}

/// In-place inverse 3-D FFT (normalized by `1/N`).
pub fn ifft3(data: &mut [Complex64], dims: [usize; 3]) {
    transform(data, dims, true);
    let scale = 1.0 / (dims[0] * dims[1] * dims[2]) as f64;
    for v in data.iter_mut() {
        *v *= scale;
    }
}

fn transform(data: &mut [Complex64], dims: [usize; 3], inverse: bool) {
    assert_eq!(data.len(), dims[0] * dims[1] * dims[2]);
    let mut planner = FftPlanner::new();
    // Axis 0: contiguous rows.
    {
        let fft = if inverse { planner.plan_fft_inverse(dims[0]) } else { planner.plan_fft_forward(dims[0]) };
        for row in data.chunks_exact_mut(dims[0]) {
            fft.process(row);
        }
    }
    // Axes 1 and 2: gather strided lines into a scratch buffer.
    for axis in 1..3 {
        let n = dims[axis];
        let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
        let stride = if axis == 1 { dims[0] } else { dims[0] * dims[1] };
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        // Enumerate all 1-D lines along `axis`.
        let (outer, inner) = if axis == 1 { (dims[2], dims[0]) } else { (dims[1], dims[0]) };
        for a in 0..outer {
            for b in 0..inner {
                let base = if axis == 1 {
                    a * dims[0] * dims[1] + b
                } else {
                    a * dims[0] + b
                };
                for (m, v) in line.iter_mut().enumerate() {
                    *v = data[base + m * stride];
                }
                fft.process(&mut line);
                for (m, v) in line.iter().enumerate() {
                    data[base + m * stride] = *v;
                }
            }
        }
    }
}

/// Angular frequency of DFT bin `m` of `n` samples on a periodic box of
/// length `len`: `2 pi m' / len` with `m'` the signed alias of `m`.
#[inline]
pub fn angular_freq(m: usize, n: usize, len: f64) -> f64 {
    let signed = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
    2.0 * std::f64::consts::PI * signed / len
}
