//! End-to-end stability experiment.
//!
//! Sweeps a one-parameter perturbation family, builds both restricted
//! Cauchy data sets for each amplitude, measures the pseudo-distance, and
//! fits the exponent of `H^1 error ~ |log delta|^{-lambda}`. The schedule's
//! exponent `s^2 / (3 (1+s)^2)` is an upper-bound exponent and is reported
//! alongside, not asserted.
//!
//! Run with: `cargo run --example stability_curve`

use emlab::coeff::CoeffExpr;
use emlab::geometry::{DomainSpec, FlatSpec, Rect2};
use emlab::recon::{stability_experiment, StabilityConfig};

fn main() {
    let cfg = StabilityConfig {
        domain: DomainSpec::Flat(FlatSpec {
            box_lo: [0.0, 0.0, -1.0],
            box_hi: [1.0, 1.0, 0.0],
            resolution: [10, 10, 10],
            gamma0: vec![Rect2 { lo: [0.25, 0.25], hi: [0.75, 0.75] }],
        }),
        base_mu: CoeffExpr::constant(1.0),
        base_gamma: CoeffExpr::constant(1.2),
        bump: CoeffExpr::GaussianBump {
            base: [0.0, 0.0],
            amplitude: [1.0, 0.0],
            center: [0.5, 0.5, -0.5],
            width: 0.18,
        },
        amplitudes: vec![0.01, 0.02, 0.04, 0.08, 0.16],
        omega: 1.3,
        s: 0.25,
        dict_size: 4,
        solve_tol: 1e-9,
        identity_tol: 5.0,
    };
    let curve = stability_experiment(&cfg).expect("sweep completes");
    println!("{:>10} {:>14} {:>14}", "amplitude", "delta", "H1 error");
    for p in &curve.points {
        println!("{:>10} {:>14.4e} {:>14.4e}", p.amplitude, p.delta, p.h1_error);
    }
    println!("\nfitted exponent lambda-hat      = {:.4}", curve.lambda_hat);
    println!("schedule upper-bound exponent   = {:.4}", curve.lambda_paper);
}
