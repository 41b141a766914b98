//! Run configuration and reproducibility manifest.
//!
//! Every command-line run consumes a single JSON [`RunConfig`] and produces a
//! [`RunManifest`] recording the configuration hash, the seed, the executed
//! stages with wall-clock timings, and the artifact paths. Reruns with the
//! same configuration and seed produce bit-identical artifacts: all
//! randomness is drawn from one seeded generator and all parallel reductions
//! are order-deterministic.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cgo::CgoConfig;
use crate::coeff::CoeffExpr;
use crate::geometry::{DomainSpec, FlatSpec, Rect2};

/// Errors raised while loading configurations or writing manifests.
#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("i/o failure at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Full description of one experiment: the domain, the two coefficient
/// pairs, the probing frequency, and per-stage numerical knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub mu1: CoeffExpr,
    pub gamma1: CoeffExpr,
    pub mu2: CoeffExpr,
    pub gamma2: CoeffExpr,
    pub omega: f64,
    /// Smoothness index of the coefficient class, in (0, 1/2).
    pub s: f64,
    /// A priori coefficient bound.
    pub m_bound: f64,
    /// Extension radius for the whole-space coefficient extension.
    pub rho: f64,
    pub cgo: CgoConfig,
    /// Fourier mode and CGO size for the recovery stages.
    pub xi: [f64; 3],
    pub tau: f64,
    /// Amplitudes swept by the stability experiment.
    pub amplitudes: Vec<f64>,
    /// Unit perturbation (added to `gamma1`) for the stability sweep.
    pub bump: CoeffExpr,
    /// Number of boundary-dictionary entries per Cauchy set.
    pub dict_size: usize,
    /// Forward linear-solver tolerance.
    pub solve_tol: f64,
    /// Normal-component identity tolerance during Cauchy extraction.
    pub identity_tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            domain: DomainSpec::Flat(FlatSpec {
                box_lo: [0.0, 0.0, -1.0],
                box_hi: [1.0, 1.0, 0.0],
                resolution: [16, 16, 16],
                gamma0: vec![Rect2 { lo: [0.25, 0.25], hi: [0.75, 0.75] }],
            }),
            mu1: CoeffExpr::constant(1.0),
            gamma1: CoeffExpr::constant(1.2),
            mu2: CoeffExpr::constant(1.0),
            // Centered on the flat boundary piece so the even extension
            // across z = 0 is smooth (the Neumann gate requires it).
            gamma2: CoeffExpr::GaussianBump {
                base: [1.2, 0.0],
                amplitude: [0.15, 0.0],
                center: [0.5, 0.5, 0.0],
                width: 0.2,
            },
            omega: 1.3,
            s: 0.25,
            m_bound: 10.0,
            rho: 2.0,
            cgo: CgoConfig { n: 24, box_len: 5.0, ..Default::default() },
            xi: [1.2, 0.5, 0.3],
            tau: 12.0,
            amplitudes: vec![0.01, 0.02, 0.04, 0.08, 0.16],
            bump: CoeffExpr::GaussianBump {
                base: [0.0, 0.0],
                amplitude: [1.0, 0.0],
                center: [0.5, 0.5, -0.5],
                width: 0.18,
            },
            dict_size: 6,
            solve_tol: 1e-9,
            identity_tol: 5.0,
        }
    }
}

impl RunConfig {
    /// Load and validate a configuration file.
    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        let text = fs::read_to_string(path)
            .map_err(|source| ManifestError::Io { path: path.to_path_buf(), source })?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| ManifestError::ConfigInvalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ManifestError> {
        if !(self.omega > 0.0) {
            return Err(ManifestError::ConfigInvalid(format!(
                "omega must be positive, got {}",
                self.omega
            )));
        }
        if !(self.s > 0.0 && self.s < 0.5) {
            return Err(ManifestError::ConfigInvalid(format!(
                "s must lie in (0, 1/2), got {}",
                self.s
            )));
        }
        if self.tau <= 0.0 || self.cgo.n < 8 || self.dict_size == 0 {
            return Err(ManifestError::ConfigInvalid(
                "tau, cgo.n and dict_size must be positive (cgo.n >= 8)".into(),
            ));
        }
        Ok(())
    }

    /// Canonical content hash (hex SHA-256 of the serialized configuration).
    pub fn sha256(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// One executed stage: name, wall-clock seconds, produced artifact paths.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub seconds: f64,
    pub artifacts: Vec<String>,
}

/// Reproducibility record of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config_sha256: String,
    pub seed: u64,
    pub grid_override: Option<usize>,
    pub stages: Vec<StageRecord>,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: &RunConfig, seed: u64, grid: Option<usize>) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            config_sha256: config.sha256(),
            seed,
            grid_override: grid,
            stages: Vec::new(),
        }
    }

    /// Run a stage, timing it and recording the artifacts it reports.
    pub fn stage<T, E>(
        &mut self,
        name: &str,
        f: impl FnOnce() -> Result<(T, Vec<String>), E>,
    ) -> Result<T, E> {
        let start = Instant::now();
        let (value, artifacts) = f()?;
        self.stages.push(StageRecord {
            name: name.to_string(),
            seconds: start.elapsed().as_secs_f64(),
            artifacts,
        });
        Ok(value)
    }

    pub fn write(&self, path: &Path) -> Result<(), ManifestError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, text)
            .map_err(|source| ManifestError::Io { path: path.to_path_buf(), source })
    }
}
