//! Run configuration documents and environment overrides.
//!
//! A JSON object with optional sections `protocol`, `kmeans`, `cnn`,
//! `diffusion` and `outputs`; missing keys take their defaults and unknown
//! keys are rejected. Seeds are resolved as command-line flag, then
//! `CHRONOS_SEED`, then the document.

use std::path::{Path, PathBuf};

use chronos_core::protocol::ProtocolConfig;
use chronos_learn::classifier::CnnConfig;
use chronos_learn::cluster::KMeansConfig;
use chronos_learn::generator::DiffusionConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SEED_VAR: &str = "CHRONOS_SEED";
pub const THREADS_VAR: &str = "CHRONOS_THREADS";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KMeansSection {
    pub k: usize,
    pub max_iters: usize,
    pub tolerance: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for KMeansSection {
    fn default() -> Self {
        let d = KMeansConfig::default();
        Self {
            k: d.k,
            max_iters: d.max_iters,
            tolerance: d.tolerance,
            restarts: d.restarts,
            seed: d.seed,
        }
    }
}

impl From<&KMeansSection> for KMeansConfig {
    fn from(s: &KMeansSection) -> Self {
        Self {
            k: s.k,
            max_iters: s.max_iters,
            tolerance: s.tolerance,
            restarts: s.restarts,
            seed: s.seed,
        }
    }
}

/// Record dimensions are taken from the data, not from here.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CnnSection {
    pub dropout: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    /// Share of a single input set held out for testing when no test set is
    /// given.
    pub test_fraction: f64,
}

impl Default for CnnSection {
    fn default() -> Self {
        let d = CnnConfig::default();
        Self {
            dropout: d.dropout,
            batch_size: d.batch_size,
            epochs: d.epochs,
            lr: d.lr,
            seed: d.seed,
            test_fraction: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiffusionSection {
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    pub timesteps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
}

impl Default for DiffusionSection {
    fn default() -> Self {
        let d = DiffusionConfig::default();
        Self {
            hidden: d.hidden,
            epochs: d.epochs,
            batch_size: d.batch_size,
            lr: d.lr,
            seed: d.seed,
            timesteps: d.timesteps,
            beta_start: d.beta_start,
            beta_end: d.beta_end,
        }
    }
}

impl DiffusionSection {
    pub fn to_config(&self, t_steps: usize, n_qubits: usize) -> DiffusionConfig {
        DiffusionConfig {
            t_steps,
            n_qubits,
            hidden: self.hidden,
            classes: 2,
            epochs: self.epochs,
            batch_size: self.batch_size,
            lr: self.lr,
            seed: self.seed,
            timesteps: self.timesteps,
            beta_start: self.beta_start,
            beta_end: self.beta_end,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputsSection {
    /// Relative output paths are resolved against this directory.
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub protocol: ProtocolConfig,
    pub kmeans: KMeansSection,
    pub cnn: CnnSection,
    pub diffusion: DiffusionSection,
    pub outputs: OutputsSection,
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> CliResult<()> {
        KMeansConfig::from(&self.kmeans).validate()?;
        let cnn = &self.cnn;
        CnnConfig {
            dropout: cnn.dropout,
            batch_size: cnn.batch_size,
            epochs: cnn.epochs,
            lr: cnn.lr,
            ..CnnConfig::default()
        }
        .validate()?;
        if !(cnn.test_fraction > 0.0 && cnn.test_fraction < 1.0) {
            return Err(CliError::Usage(format!(
                "cnn.test_fraction must lie in (0, 1), got {}",
                cnn.test_fraction
            )));
        }
        self.diffusion.to_config(5, 10).validate()?;
        Ok(())
    }

    /// Replaces every seed in the document.
    pub fn set_seed(&mut self, seed: u64) {
        self.protocol = self.protocol.clone().with_seed(seed);
        self.kmeans.seed = seed;
        self.cnn.seed = seed;
        self.diffusion.seed = seed;
    }

    pub fn output_path(&self, path: &Path) -> PathBuf {
        match &self.outputs.dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }
}

fn env_number<T: std::str::FromStr>(var: &str) -> CliResult<Option<T>> {
    match std::env::var(var) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{var} must be a non-negative integer, got '{v}'"))),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Usage(format!("{var}: {e}"))),
    }
}

pub fn env_seed() -> CliResult<Option<u64>> {
    env_number(SEED_VAR)
}

/// Sizes the global worker pool from `CHRONOS_THREADS`, if set.
pub fn configure_threads() -> CliResult<Option<usize>> {
    let Some(n) = env_number::<usize>(THREADS_VAR)? else {
        return Ok(None);
    };
    if n == 0 {
        return Err(CliError::Usage(format!("{THREADS_VAR} must be at least 1")));
    }
    // a second call in the same process keeps the existing pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(Some(n))
}
