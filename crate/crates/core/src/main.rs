//! Command-line driver: phantom construction, forward solves, CGO solves,
//! potential recovery, the stability sweep, and a self-verification battery.
//!
//! Every run reads one JSON configuration, writes its artifacts under the
//! output directory, and records a reproducibility manifest. Reruns with
//! identical configuration and seed are bit-identical.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use emlab::cgo::{build_cgo, choose_zetas, Channel, Side};
use emlab::coeff::{extend_coefficients, CoefficientPair};
use emlab::forward::{solve_dictionary, Dictionary, SolveOpts};
use emlab::geometry::{build_domain, DomainSpec};
use emlab::grid::{write_snapshot, AugmentedField, Grid3};
use emlab::manifest::{RunConfig, RunManifest};
use emlab::recon::{
    carleman_check, carleman_params, carleman_transfer, cylindrical_integral, fg_fields,
    fourier_sample_fg, parameter_schedule, rl_bound, stability_experiment, ModulusB,
    StabilityConfig,
};
use emlab::reduction::{factorization_residual, FactorKind, Potentials};

#[derive(Parser)]
#[command(name = "emlab", about = "Maxwell inverse-problem laboratory", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration file (defaults built in when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for all randomness in the run.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Output directory for artifacts and the manifest.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Override the per-axis grid resolution.
    #[arg(long, global = true)]
    grid: Option<usize>,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Rasterize the configured phantoms and check admissibility.
    Phantom,
    /// Solve the boundary dictionary and extract Cauchy data.
    Forward,
    /// Build CGO solutions for the configured (xi, tau).
    Cgo,
    /// Recover the reduced potentials and run the Carleman transfer.
    Recover,
    /// Sweep the perturbation family and fit the stability exponent.
    Stability,
    /// Run the self-check battery and emit a pass/fail report.
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Phantom => "phantom",
            Command::Forward => "forward",
            Command::Cgo => "cgo",
            Command::Recover => "recover",
            Command::Stability => "stability",
            Command::Verify => "verify",
        }
    }
}

/// Stage-tagged error wrapper: every failure reports which pipeline stage
/// produced it.
#[derive(Debug)]
struct StageError {
    stage: String,
    message: String,
}

impl std::fmt::Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "stage {}: {}", self.stage, self.message)
    }
}

fn tag<E: std::fmt::Display>(stage: &str) -> impl Fn(E) -> StageError + '_ {
    move |e| StageError { stage: stage.to_string(), message: e.to_string() }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), StageError> {
    fs::write(path, serde_json::to_string_pretty(value).expect("serializes"))
        .map_err(tag("write-artifacts"))
}

fn apply_grid_override(cfg: &mut RunConfig, grid: Option<usize>) {
    if let Some(n) = grid {
        if let DomainSpec::Flat(spec) = &mut cfg.domain {
            spec.resolution = [n, n, n];
        }
        cfg.cgo.n = n;
    }
}

fn pair(cfg: &RunConfig, which: usize) -> CoefficientPair {
    let (mu, gamma) = if which == 1 {
        (cfg.mu1.clone(), cfg.gamma1.clone())
    } else {
        (cfg.mu2.clone(), cfg.gamma2.clone())
    };
    CoefficientPair { mu, gamma, omega: cfg.omega, m_bound: cfg.m_bound, s: cfg.s }
}

fn run_phantom(cfg: &RunConfig, out: &Path, m: &mut RunManifest) -> Result<serde_json::Value, StageError> {
    let domain = build_domain(&cfg.domain).map_err(tag("phantom"))?;
    let mut report = Vec::new();
    for which in [1usize, 2] {
        let p = pair(cfg, which);
        let path = out.join(format!("phantom{which}.snap"));
        m.stage(&format!("phantom-{which}"), || -> Result<((), Vec<String>), StageError> {
            p.check_admissible(&domain.u_grid).map_err(tag("phantom"))?;
            let mu = p.mu.sample(domain.u_grid);
            let gamma = p.gamma.sample(domain.u_grid);
            let f = fs::File::create(&path).map_err(tag("phantom"))?;
            write_snapshot(f, &domain.u_grid, &[&mu.data, &gamma.data])
                .map_err(tag("phantom"))?;
            Ok(((), vec![path.display().to_string()]))
        })?;
        report.push(json!({"pair": which, "admissible": true, "snapshot": path.display().to_string()}));
    }
    Ok(json!({"phantoms": report}))
}

fn run_forward(cfg: &RunConfig, out: &Path, m: &mut RunManifest) -> Result<serde_json::Value, StageError> {
    let domain = build_domain(&cfg.domain).map_err(tag("forward"))?;
    let g = domain.u_grid;
    let dict_full = Dictionary::default_for(g.origin, g.hi());
    let dict = Dictionary {
        entries: dict_full.entries.into_iter().take(cfg.dict_size).collect(),
    };
    let opts = SolveOpts { tol: cfg.solve_tol, check_resonance: true, ..Default::default() };
    let p1 = pair(cfg, 1);
    let set = m.stage("forward-dictionary", || {
        solve_dictionary(
            &domain,
            &p1.mu,
            &p1.gamma,
            cfg.omega,
            &dict,
            "pair1",
            &opts,
            cfg.identity_tol,
        )
        .map(|s| (s, vec![]))
        .map_err(tag("forward"))
    })?;
    let rows: Vec<serde_json::Value> = set
        .data
        .iter()
        .map(|d| {
            json!({
                "input": d.input_id,
                "identity_errors": d.identity_errors,
                "t_norm": d.t.th_norm(),
                "s_norm": d.s.th_norm(),
            })
        })
        .collect();
    let path = out.join("cauchy_set.json");
    write_json(&path, &json!({"omega": cfg.omega, "entries": rows}))?;
    Ok(json!({"cauchy_set": path.display().to_string(), "entries": set.data.len()}))
}

fn run_cgo(cfg: &RunConfig, out: &Path, m: &mut RunManifest) -> Result<serde_json::Value, StageError> {
    let zp = choose_zetas(cfg.xi, cfg.tau, cfg.omega).map_err(tag("cgo"))?;
    let p1 = pair(cfg, 1);
    let mut reports = Vec::new();
    for (side, label) in [(Side::Principal, "principal"), (Side::Adjoint, "adjoint")] {
        let sol = m.stage(&format!("cgo-{label}"), || {
            build_cgo(&p1.mu, &p1.gamma, cfg.omega, &zp, Channel::F, side, &cfg.cgo)
                .map(|s| (s, vec![]))
                .map_err(tag("cgo"))
        })?;
        let path = out.join(format!("cgo_{label}.snap"));
        let comps = sol.r.components();
        let refs: Vec<&[Complex64]> = comps.iter().map(|c| c.data.as_slice()).collect();
        let f = fs::File::create(&path).map_err(tag("cgo"))?;
        write_snapshot(f, &sol.grid, &refs).map_err(tag("cgo"))?;
        reports.push(serde_json::to_value(&sol.report).expect("report serializes"));
    }
    let path = out.join("cgo_report.json");
    write_json(&path, &json!({"reports": reports}))?;
    Ok(json!({"report": path.display().to_string()}))
}

fn run_recover(cfg: &RunConfig, out: &Path, m: &mut RunManifest) -> Result<serde_json::Value, StageError> {
    let domain = build_domain(&cfg.domain).map_err(tag("recover"))?;
    let p1 = extend_coefficients(&pair(cfg, 1), &domain, cfg.rho).map_err(tag("recover"))?;
    let p2 = extend_coefficients(&pair(cfg, 2), &domain, cfg.rho).map_err(tag("recover"))?;
    let lo = domain.u_grid.origin;
    let hi = domain.u_grid.hi();
    // Symmetrize the box across the flat boundary piece (z = 0).
    let omega_lo = [lo[0], lo[1], lo[2]];
    let omega_hi = [hi[0], hi[1], -lo[2]];
    let mut csv = String::from("channel,xi1,xi2,xi3,tau,est_re,est_im,direct_re,direct_im,remainder_scale,reflected_bound\n");
    for channel in [Channel::F, Channel::G] {
        let s = m.stage(&format!("fourier-{channel:?}"), || {
            fourier_sample_fg(
                &p1, &p2, omega_lo, omega_hi, cfg.xi, cfg.tau, channel, cfg.s, 0.1, &cfg.cgo,
            )
            .map(|s| (s, vec![]))
            .map_err(tag("fourier"))
        })?;
        csv.push_str(&format!(
            "{:?},{},{},{},{},{:e},{:e},{:e},{:e},{:e},{:e}\n",
            channel,
            s.xi[0],
            s.xi[1],
            s.xi[2],
            s.tau,
            s.cgo_estimate[0],
            s.cgo_estimate[1],
            s.direct_value[0],
            s.direct_value[1],
            s.remainder_scale,
            s.reflected_bound,
        ));
    }
    let csv_path = out.join("fourier_samples.csv");
    fs::write(&csv_path, &csv).map_err(tag("write-artifacts"))?;
    // Transfer stage on the doubled box.
    let n = domain.u_grid.n;
    let tg = Grid3::from_box(omega_lo, omega_hi, [n[0], n[1], 2 * n[2] - 1]);
    let rp = m.stage("fg-assembly", || {
        fg_fields(&p1, &p2, tg).map(|r| (r, vec![])).map_err(tag("fg-assembly"))
    })?;
    let x0 = [omega_lo[0] - (omega_hi[0] - omega_lo[0]), omega_lo[1], omega_lo[2]];
    let params = carleman_params(x0, 0.25, omega_lo, omega_hi).map_err(tag("carleman"))?;
    let transfer = m.stage("carleman-transfer", || {
        carleman_transfer(&p1, &p2, tg, &params, &rp.f, &rp.g)
            .map(|t| (t, vec![]))
            .map_err(tag("carleman"))
    })?;
    let path = out.join("recover_report.json");
    write_json(
        &path,
        &json!({
            "fourier_csv": csv_path.display().to_string(),
            "transfer": serde_json::to_value(&transfer).expect("serializes"),
        }),
    )?;
    Ok(json!({"report": path.display().to_string()}))
}

fn run_stability(cfg: &RunConfig, out: &Path, m: &mut RunManifest) -> Result<serde_json::Value, StageError> {
    let scfg = StabilityConfig {
        domain: cfg.domain.clone(),
        base_mu: cfg.mu1.clone(),
        base_gamma: cfg.gamma1.clone(),
        bump: cfg.bump.clone(),
        amplitudes: cfg.amplitudes.clone(),
        omega: cfg.omega,
        s: cfg.s,
        dict_size: cfg.dict_size,
        solve_tol: cfg.solve_tol,
        identity_tol: cfg.identity_tol,
    };
    let curve = m.stage("stability-sweep", || {
        stability_experiment(&scfg).map(|c| (c, vec![])).map_err(tag("stability"))
    })?;
    let mut csv = String::from("amplitude,delta,h1_error\n");
    for p in &curve.points {
        csv.push_str(&format!("{},{:e},{:e}\n", p.amplitude, p.delta, p.h1_error));
    }
    let csv_path = out.join("stability_curve.csv");
    fs::write(&csv_path, &csv).map_err(tag("write-artifacts"))?;
    let path = out.join("stability_report.json");
    write_json(&path, &serde_json::to_value(&curve).expect("serializes"))?;
    Ok(json!({
        "curve": csv_path.display().to_string(),
        "lambda_hat": curve.lambda_hat,
        "lambda_upper_bound": curve.lambda_paper,
    }))
}

fn run_verify(cfg: &RunConfig, seed: u64, m: &mut RunManifest) -> Result<serde_json::Value, StageError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let mut record = |name: &str, pass: bool, detail: String| {
        checks.push(json!({"name": name, "pass": pass, "detail": detail}));
    };

    // Zeta algebra on random draws.
    let mut zeta_ok = true;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let xi: [f64; 3] =
            [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        if (xi[0] * xi[0] + xi[1] * xi[1]).sqrt() < 1e-6 {
            continue;
        }
        let tau = rng.gen_range(2.0..50.0);
        let zp = choose_zetas(xi, tau, cfg.omega).map_err(tag("verify-zeta"))?;
        for side in [Side::Principal, Side::Adjoint] {
            let z = zp.zeta(side);
            let dot = z[0] * z[0] + z[1] * z[1] + z[2] * z[2];
            let err = (dot - Complex64::new(cfg.omega * cfg.omega, 0.0)).norm();
            worst = worst.max(err);
            zeta_ok &= err < 1e-9 * (1.0 + tau * tau);
        }
        let diff = [
            zp.zeta1[0] - zp.zeta2[0].conj(),
            zp.zeta1[1] - zp.zeta2[1].conj(),
            zp.zeta1[2] - zp.zeta2[2].conj(),
        ];
        for c in 0..3 {
            let err = (diff[c] + Complex64::new(xi[c], 0.0)).norm();
            worst = worst.max(err);
            zeta_ok &= err < 1e-9 * (1.0 + tau);
        }
    }
    record("zeta-algebra", zeta_ok, format!("worst residual {worst:.3e}"));

    // Factorization residual on a small constant-coefficient grid.
    let grid = Grid3::cube(-0.5, 0.5, 13);
    let pot = Potentials::from_analytic(
        &cfg.mu1,
        &cfg.gamma1,
        cfg.omega,
        grid,
    )
    .map_err(tag("verify-factorization"))?;
    let z = AugmentedField::from_fn(grid, |x| {
        let ph = (Complex64::new(0.0, 1.0) * (0.9 * x[0] - 0.4 * x[1] + 0.2 * x[2])).exp();
        [ph, 0.3 * ph, -0.2 * ph, 0.7 * ph, 0.1 * ph, -0.5 * ph, 0.4 * ph, 0.6 * ph]
    });
    let mut fact_ok = true;
    let mut fact_detail = String::new();
    for kind in [FactorKind::Principal, FactorKind::Prime, FactorKind::Adjoint] {
        let r = factorization_residual(&pot, &z, kind, 2);
        fact_ok &= r.is_finite();
        fact_detail.push_str(&format!("{kind:?}: {r:.3e} "));
    }
    record("factorization-finite", fact_ok, fact_detail);

    // Parameter schedule and cylindrical bound.
    let sched = parameter_schedule(cfg.s, 1e-6, &ModulusB::Linear, 1.0).map_err(tag("verify-schedule"))?;
    let sched_ok = (sched.tau - sched.d.powf(-2.0 * (1.0 + cfg.s))).abs() < 1e-9 * sched.tau
        && sched.lambda > 0.0;
    record("parameter-schedule", sched_ok, format!("tau {:.3e} d {:.3e}", sched.tau, sched.d));
    let cyl = cylindrical_integral(2.0, 32.0, 0.3, cfg.omega);
    let cyl_ok = cyl <= 2.0 / (0.3 * 0.3 * 32.0);
    record("cylindrical-bound", cyl_ok, format!("integral {cyl:.3e}"));

    // Riemann-Lebesgue bound on random smooth draws.
    let mut rl_ok = true;
    for t in 0..5 {
        let gq = Grid3::cube(-1.0, 1.0, 21);
        let cx = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
        let q = emlab::grid::ScalarField::from_fn(gq, |x| {
            let r2: f64 = (0..3).map(|c| (x[c] - cx[c]) * (x[c] - cx[c])).sum();
            Complex64::new((-6.0 * r2).exp(), 0.0)
        });
        let tau = rng.gen_range(1.0..8.0);
        let rep = rl_bound(&q, &|x| (tau * x[0], [tau, 0.0, 0.0]), [0.05, 0.1, 0.2][t % 3]);
        rl_ok &= rep.lhs <= rep.rhs;
    }
    record("riemann-lebesgue", rl_ok, String::new());

    // Carleman interior estimate.
    let gu = Grid3::cube(0.0, 1.0, 17);
    let u = emlab::grid::ScalarField::from_fn(gu, |x| {
        let r2 = (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2) + (x[2] - 0.5).powi(2);
        Complex64::new((1.0 - 8.0 * r2).max(0.0).powi(3), 0.0)
    });
    let cp = carleman_params([-1.0, 0.5, 0.5], 0.1, [0.0; 3], [1.0; 3]).map_err(tag("verify-carleman"))?;
    let chk = carleman_check(&u, &cp);
    record("carleman-ratio", chk.ratio < 1.0, format!("ratio {:.3e}", chk.ratio));

    let all_pass = checks.iter().all(|c| c["pass"].as_bool().unwrap_or(false));
    m.stage("verify", || Ok::<_, StageError>(((), vec![])))?;
    Ok(json!({"all_pass": all_pass, "checks": checks}))
}

fn run() -> Result<(), StageError> {
    let cli = Cli::parse();
    if cli.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global()
            .map_err(tag("setup"))?;
    }
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(tag("config"))?,
        None => RunConfig::default(),
    };
    apply_grid_override(&mut cfg, cli.grid);
    cfg.validate().map_err(tag("config"))?;
    fs::create_dir_all(&cli.out).map_err(tag("setup"))?;
    let mut manifest = RunManifest::new(cli.command.name(), &cfg, cli.seed, cli.grid);
    let summary = match cli.command {
        Command::Phantom => run_phantom(&cfg, &cli.out, &mut manifest)?,
        Command::Forward => run_forward(&cfg, &cli.out, &mut manifest)?,
        Command::Cgo => run_cgo(&cfg, &cli.out, &mut manifest)?,
        Command::Recover => run_recover(&cfg, &cli.out, &mut manifest)?,
        Command::Stability => run_stability(&cfg, &cli.out, &mut manifest)?,
        Command::Verify => run_verify(&cfg, cli.seed, &mut manifest)?,
    };
    let summary_path = cli.out.join(format!("{}_summary.json", cli.command.name()));
    write_json(&summary_path, &summary)?;
    manifest
        .write(&cli.out.join("manifest.json"))
        .map_err(tag("manifest"))?;
    if cli.command == Command::Verify && !summary["all_pass"].as_bool().unwrap_or(false) {
        return Err(StageError { stage: "verify".into(), message: "self-checks failed".into() });
    }
    println!("{}", serde_json::to_string_pretty(&summary).expect("serializes"));
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
