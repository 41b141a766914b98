//! Complex geometrical optics: remainder decay in the size parameter.
//!
//! For `zeta . zeta = k^2` with `|zeta| ~ tau`, the CGO ansatz
//! `Z = e^{i zeta . x}(L + R)` solves `(-Lap + Q) Z = 0` with
//! `||R||_{L^2} <= C / |zeta|`. This example sweeps `tau` and reports the
//! measured remainder norms and the fitted decay slope, for both the
//! principal and the adjoint (conjugate-potential) sides.
//!
//! Run with: `cargo run --example cgo_remainder`

use emlab::cgo::{build_cgo, choose_zetas, CgoConfig, Channel, Side};
use emlab::coeff::CoeffExpr;

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

fn main() {
    let omega = 1.0;
    let mu = CoeffExpr::constant(1.0);
    let gamma = CoeffExpr::GaussianBump {
        base: [1.1, 0.0],
        amplitude: [0.25, 0.0],
        center: [0.0, 0.0, 0.0],
        width: 0.3,
    };
    let xi = [1.2, 0.5, 0.3];
    let cfg = CgoConfig { n: 32, box_len: 6.0, ..Default::default() };

    for (side, label) in [(Side::Principal, "principal"), (Side::Adjoint, "adjoint")] {
        println!("{label} side: remainder vs tau");
        println!("{:>8} {:>12} {:>12} {:>6}", "tau", "|R| L2", "|zeta|", "iters");
        let mut lx = Vec::new();
        let mut ly = Vec::new();
        for tau in [4.0, 8.0, 16.0, 32.0] {
            let zp = choose_zetas(xi, tau, omega).expect("nondegenerate xi");
            let sol = build_cgo(&mu, &gamma, omega, &zp, Channel::F, side, &cfg)
                .expect("fixed point converges");
            let rnorm = sol.r.l2();
            let zmag = zp.zeta_mag(side);
            println!("{tau:>8.1} {rnorm:>12.4e} {zmag:>12.4e} {:>6}", sol.report.iterations);
            lx.push(tau.ln());
            ly.push(rnorm.ln());
        }
        let slope = fit_slope(&lx, &ly);
        println!("fitted slope: {slope:.3} (expected <= -0.8)\n");
    }
}
