//! Conditional denoising diffusion over flattened trajectory records.
//!
//! Records are mapped from {0,1} to {−1,+1}, noised along a linear variance
//! schedule and a network is trained to predict the injected noise given
//! the timestep and the direction label. Sampling runs the reverse chain
//! from white noise and binarises by sign.

mod denoiser;
mod sample;
mod schedule;
mod train;

pub use denoiser::{Denoiser, FusedDenoiser, Scratch, DENOISER_MODEL_KIND};
pub use sample::{sample_from_model, sample_trajectories, SAMPLE_CHUNK};
pub use schedule::{forward_diffuse, timestep_embedding, NoiseSchedule};
pub use train::{
    diffusion_loss, fidelity_vs_epochs, labelled_fidelity, signed_inputs, train_diffusion, train_diffusion_with,
    FidelityPoint,
};

use chronos_core::protocol::Label;
use chronos_core::rng::{self, tag};
use chronos_nn::ModelCheckpoint;

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DiffusionConfig {
    pub t_steps: usize,
    pub n_qubits: usize,
    pub hidden: usize,
    pub classes: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    pub timesteps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        Self {
            t_steps: 5,
            n_qubits: 10,
            hidden: 128,
            classes: 2,
            epochs: 200,
            batch_size: 512,
            lr: 1e-3,
            seed: 0,
            timesteps: 1000,
            beta_start: 1e-4,
            beta_end: 0.02,
        }
    }
}

impl DiffusionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_steps == 0 || self.n_qubits == 0 || self.hidden == 0 || self.classes == 0 {
            return Err(Error::InvalidArgument("diffusion dimensions must be positive".into()));
        }
        if self.batch_size == 0 || !(self.lr > 0.0) {
            return Err(Error::InvalidArgument(
                "batch size >= 1 and a positive learning rate are required".into(),
            ));
        }
        self.schedule().map(|_| ())
    }

    pub fn data_dim(&self) -> usize {
        self.t_steps * self.n_qubits
    }

    pub fn schedule(&self) -> Result<NoiseSchedule> {
        NoiseSchedule::linear(self.timesteps, self.beta_start, self.beta_end)
    }
}

/// One-hot slot of a direction label: forward → 0, backward → 1.
pub fn class_of(label: Label) -> Result<usize> {
    match label {
        Label::Forward => Ok(0),
        Label::Backward => Ok(1),
        Label::Unlabeled => Err(Error::InvalidData("the generator needs direction labels".into())),
    }
}

pub fn label_of(class: usize) -> Result<Label> {
    match class {
        0 => Ok(Label::Forward),
        1 => Ok(Label::Backward),
        _ => Err(Error::InvalidArgument(format!("no direction label for class {class}"))),
    }
}

// indices within the TRAINING stream family, clear of the classifier's
const INIT_STREAM: u64 = 1 << 40;
const EPOCH_STREAM_BASE: u64 = (1 << 40) + 1;

/// A freshly initialised denoiser.
pub fn build_denoiser(cfg: &DiffusionConfig) -> Result<Denoiser> {
    let mut rng = rng::task_stream(cfg.seed, tag::TRAINING, INIT_STREAM, 0);
    Denoiser::new(cfg, &mut rng)
}

/// Weights plus the settings needed to rebuild the network and its schedule.
/// `epoch == 0` marks an untrained model.
pub fn denoiser_checkpoint(model: &Denoiser, cfg: &DiffusionConfig, epoch: usize, history: &[f64]) -> ModelCheckpoint {
    let mut ckpt = model.to_checkpoint();
    ckpt.seed = cfg.seed;
    ckpt.epoch = epoch;
    ckpt.loss_history = history.to_vec();
    let meta = [
        ("t_steps", cfg.t_steps.to_string()),
        ("n_qubits", cfg.n_qubits.to_string()),
        ("hidden", cfg.hidden.to_string()),
        ("classes", cfg.classes.to_string()),
        ("timesteps", cfg.timesteps.to_string()),
        ("beta_start", format!("{:?}", cfg.beta_start)),
        ("beta_end", format!("{:?}", cfg.beta_end)),
        ("batch_size", cfg.batch_size.to_string()),
        ("lr", format!("{:?}", cfg.lr)),
    ];
    for (k, v) in meta {
        ckpt.metadata.insert(k.to_string(), v);
    }
    ckpt
}

fn meta<T: std::str::FromStr>(ckpt: &ModelCheckpoint, key: &str) -> Result<T> {
    ckpt.metadata
        .get(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::InvalidData(format!("checkpoint lacks a valid '{key}'")))
}

pub fn load_denoiser(ckpt: &ModelCheckpoint) -> Result<(Denoiser, DiffusionConfig)> {
    if ckpt.model_kind != DENOISER_MODEL_KIND {
        return Err(Error::InvalidData(format!(
            "checkpoint holds a '{}', not a denoiser",
            ckpt.model_kind
        )));
    }
    let defaults = DiffusionConfig::default();
    let cfg = DiffusionConfig {
        t_steps: meta(ckpt, "t_steps")?,
        n_qubits: meta(ckpt, "n_qubits")?,
        hidden: meta(ckpt, "hidden")?,
        classes: meta(ckpt, "classes")?,
        timesteps: meta(ckpt, "timesteps")?,
        beta_start: meta(ckpt, "beta_start")?,
        beta_end: meta(ckpt, "beta_end")?,
        batch_size: meta(ckpt, "batch_size").unwrap_or(defaults.batch_size),
        lr: meta(ckpt, "lr").unwrap_or(defaults.lr),
        epochs: ckpt.epoch,
        seed: ckpt.seed,
    };
    cfg.validate()?;
    let model = Denoiser::from_checkpoint(&cfg, ckpt)?;
    Ok((model, cfg))
}
