//! Convolutional forward/backward direction classifier.

use chronos_core::protocol::TrajectoryRecord;
use chronos_core::rng::{self, tag};
use chronos_nn::layers::{LayerSpec, Mode};
use chronos_nn::{bce_loss, Adam, AdamConfig, ModelCheckpoint, Sequential, Tensor, BCE_CLAMP};
use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::cluster::{direction_truth, flatten_records};
use crate::{Error, Result};

pub const CNN_MODEL_KIND: &str = "direction-cnn";

// indices within the TRAINING stream family
const INIT_STREAM: u64 = 0;
const SPLIT_STREAM: u64 = 1;
const EPOCH_STREAM_BASE: u64 = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct CnnConfig {
    /// Rows per record.
    pub t_steps: usize,
    pub n_qubits: usize,
    pub dropout: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    pub train_size: usize,
    pub test_size: usize,
}

impl Default for CnnConfig {
    fn default() -> Self {
        Self {
            t_steps: 5,
            n_qubits: 10,
            dropout: 0.2,
            batch_size: 256,
            epochs: 30,
            lr: 1e-3,
            seed: 0,
            train_size: 72_000,
            test_size: 18_000,
        }
    }
}

impl CnnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_steps < 2 || self.n_qubits < 2 {
            return Err(Error::InvalidArgument("the classifier needs T, N >= 2".into()));
        }
        if self.batch_size < 2 || self.epochs == 0 || !(self.lr > 0.0) {
            return Err(Error::InvalidArgument(
                "batch size >= 2, epochs >= 1 and a positive learning rate are required".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidArgument("dropout rate must be in [0,1)".into()));
        }
        Ok(())
    }

    pub fn hidden_width(&self) -> usize {
        self.t_steps * self.n_qubits / 2
    }

    /// Layer stack: reshape to one channel, 2×1 convolution with two output
    /// channels, ReLU, flatten, dense to ⌊TN/2⌋, ReLU, batch norm, dropout,
    /// dense to one unit, sigmoid.
    pub fn layer_specs(&self) -> Vec<LayerSpec> {
        let (t, n) = (self.t_steps, self.n_qubits);
        vec![
            LayerSpec::Reshape { dims: vec![1, t, n] },
            LayerSpec::Conv2d {
                in_channels: 1,
                out_channels: 2,
                kernel: (2, 1),
            },
            LayerSpec::Relu,
            LayerSpec::Flatten,
            LayerSpec::Dense {
                inputs: 2 * (t - 1) * n,
                outputs: self.hidden_width(),
            },
            LayerSpec::Relu,
            LayerSpec::batch_norm(self.hidden_width()),
            LayerSpec::Dropout { rate: self.dropout },
            LayerSpec::Dense {
                inputs: self.hidden_width(),
                outputs: 1,
            },
            LayerSpec::Sigmoid,
        ]
    }
}

/// A freshly initialised classifier; inputs are `(B, T·N)` bit matrices.
pub fn build_cnn(cfg: &CnnConfig) -> Result<Sequential> {
    cfg.validate()?;
    let mut rng = rng::task_stream(cfg.seed, tag::TRAINING, INIT_STREAM, 0);
    Ok(Sequential::from_specs(&cfg.layer_specs(), &mut rng)?)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LearningCurve {
    /// Mean minibatch BCE over each epoch (training mode).
    pub train_loss: Vec<f64>,
    pub test_loss: Vec<f64>,
    pub test_accuracy: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub mean_bce: f64,
    /// Predicted probability of "forward" per record.
    pub probabilities: Vec<f64>,
}

/// Inputs and 0/1 targets (forward → 1).
pub fn labelled_inputs(dataset: &[TrajectoryRecord]) -> Result<(Tensor, Tensor)> {
    let x = flatten_records(dataset)?;
    let y: Vec<f64> = direction_truth(dataset)?.into_iter().map(|t| t as f64).collect();
    let y = Tensor::new(&[y.len(), 1], y)?;
    Ok((x, y))
}

fn check_dims(cfg: &CnnConfig, x: &Tensor) -> Result<()> {
    if x.row_len() != cfg.t_steps * cfg.n_qubits {
        return Err(Error::InvalidData(format!(
            "records have {} values, the classifier expects {}x{}",
            x.row_len(),
            cfg.t_steps,
            cfg.n_qubits
        )));
    }
    Ok(())
}

/// Shuffle with the config seed, then take the first `train_size` records for
/// training and the next `test_size` for testing.
pub fn split_dataset(
    dataset: &[TrajectoryRecord],
    cfg: &CnnConfig,
) -> Result<(Vec<TrajectoryRecord>, Vec<TrajectoryRecord>)> {
    if cfg.train_size + cfg.test_size > dataset.len() {
        return Err(Error::InvalidArgument(format!(
            "split {}+{} exceeds the {} records available",
            cfg.train_size,
            cfg.test_size,
            dataset.len()
        )));
    }
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut rng::task_stream(cfg.seed, tag::TRAINING, SPLIT_STREAM, 0));
    let pick = |range: std::ops::Range<usize>| order[range].iter().map(|&i| dataset[i].clone()).collect();
    Ok((
        pick(0..cfg.train_size),
        pick(cfg.train_size..cfg.train_size + cfg.test_size),
    ))
}

const EVAL_CHUNK: usize = 4096;

/// Eval-mode probabilities, computed in fixed chunks so the result does not
/// depend on the number of threads.
pub fn predict(model: &Sequential, x: &Tensor) -> Result<Vec<f64>> {
    let n = x.batch();
    let chunks: Vec<usize> = (0..n).step_by(EVAL_CHUNK).collect();
    let parts = chunks
        .into_par_iter()
        .map(|start| {
            let end = (start + EVAL_CHUNK).min(n);
            Ok(model.infer(&x.slice_rows(start, end))?.into_data())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.concat())
}

fn score(probabilities: Vec<f64>, y: &Tensor) -> Result<Evaluation> {
    let p = Tensor::new(&[probabilities.len(), 1], probabilities)?;
    let (mean_bce, _) = bce_loss(&p, y)?;
    let correct = p
        .data()
        .iter()
        .zip(y.data())
        .filter(|(p, y)| (**p >= 0.5) == (**y == 1.0))
        .count();
    Ok(Evaluation {
        accuracy: correct as f64 / y.len().max(1) as f64,
        mean_bce,
        probabilities: p.into_data(),
    })
}

pub fn evaluate_model(model: &Sequential, cfg: &CnnConfig, dataset: &[TrajectoryRecord]) -> Result<Evaluation> {
    let (x, y) = labelled_inputs(dataset)?;
    check_dims(cfg, &x)?;
    score(predict(model, &x)?, &y)
}

/// Minibatch training with BCE and Adam; the test split is scored after every
/// epoch. Shuffling and dropout masks come from per-epoch random streams.
pub fn train_cnn(
    model: &mut Sequential,
    train: &[TrajectoryRecord],
    test: &[TrajectoryRecord],
    cfg: &CnnConfig,
) -> Result<(ModelCheckpoint, LearningCurve)> {
    cfg.validate()?;
    let (x, y) = labelled_inputs(train)?;
    check_dims(cfg, &x)?;
    let positives = y.data().iter().filter(|v| **v == 1.0).count();
    if positives == 0 || positives == y.len() {
        return Err(Error::InvalidData("training data holds a single class".into()));
    }
    let (tx, ty) = if test.is_empty() {
        (Tensor::zeros(&[0, x.row_len()]), Tensor::zeros(&[0, 1]))
    } else {
        labelled_inputs(test)?
    };
    if !test.is_empty() {
        check_dims(cfg, &tx)?;
    }
    let mut adam = Adam::new(AdamConfig::with_lr(cfg.lr));
    let mut curve = LearningCurve::default();
    let n = x.batch();
    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng::task_stream(
            cfg.seed,
            tag::TRAINING,
            EPOCH_STREAM_BASE + epoch as u64,
            0,
        ));
        let mut dropout_rng = rng::task_stream(cfg.seed, tag::TRAINING, EPOCH_STREAM_BASE + epoch as u64, 1);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            // a lone trailing record cannot be batch-normalised
            if batch.len() < 2 {
                continue;
            }
            let xb = x.gather_rows(batch);
            let yb = y.gather_rows(batch);
            model.zero_grad();
            let p = model.forward(&xb, Mode::Train, &mut dropout_rng)?;
            let (loss, g) = bce_loss(&p, &yb)?;
            if !loss.is_finite() {
                return Err(Error::Numeric(format!("training loss became {loss} in epoch {epoch}")));
            }
            model.backward(&g)?;
            adam.step(model.named_params_mut().into_iter().map(|(_, p)| p))?;
            total += loss * batch.len() as f64;
        }
        curve.train_loss.push(total / n as f64);
        if tx.batch() > 0 {
            let e = score(predict(model, &tx)?, &ty)?;
            curve.test_loss.push(e.mean_bce);
            curve.test_accuracy.push(e.accuracy);
        }
    }
    let ckpt = cnn_checkpoint(model, cfg, cfg.epochs, &curve.train_loss);
    Ok((ckpt, curve))
}

pub fn cnn_checkpoint(model: &Sequential, cfg: &CnnConfig, epoch: usize, history: &[f64]) -> ModelCheckpoint {
    let mut ckpt = model.to_checkpoint(CNN_MODEL_KIND);
    ckpt.seed = cfg.seed;
    ckpt.epoch = epoch;
    ckpt.loss_history = history.to_vec();
    let meta = [
        ("t_steps", cfg.t_steps.to_string()),
        ("n_qubits", cfg.n_qubits.to_string()),
        ("batch_size", cfg.batch_size.to_string()),
        ("lr", format!("{:?}", cfg.lr)),
        ("threads", "1".to_string()),
    ];
    for (k, v) in meta {
        ckpt.metadata.insert(k.to_string(), v);
    }
    ckpt
}

fn meta_usize(ckpt: &ModelCheckpoint, key: &str) -> Result<usize> {
    ckpt.metadata
        .get(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::InvalidData(format!("checkpoint lacks a valid '{key}'")))
}

/// Rebuild a classifier from its checkpoint.
pub fn load_cnn(ckpt: &ModelCheckpoint) -> Result<(Sequential, CnnConfig)> {
    if ckpt.model_kind != CNN_MODEL_KIND {
        return Err(Error::InvalidData(format!(
            "checkpoint holds a '{}', not a classifier",
            ckpt.model_kind
        )));
    }
    let cfg = CnnConfig {
        t_steps: meta_usize(ckpt, "t_steps")?,
        n_qubits: meta_usize(ckpt, "n_qubits")?,
        seed: ckpt.seed,
        ..CnnConfig::default()
    };
    let model = Sequential::from_checkpoint(ckpt)?;
    if model.specs().first() != cfg.layer_specs().first() {
        return Err(Error::InvalidData(
            "checkpoint layers do not match its dimensions".into(),
        ));
    }
    Ok((model, cfg))
}

/// Scores a checkpoint on a labelled dataset.
pub fn evaluate_cnn(ckpt: &ModelCheckpoint, dataset: &[TrajectoryRecord]) -> Result<Evaluation> {
    let (model, cfg) = load_cnn(ckpt)?;
    evaluate_model(&model, &cfg, dataset)
}

/// Lowest achievable BCE per record, from the clamp on predictions.
pub fn bce_floor() -> f64 {
    -(1.0 - BCE_CLAMP).ln()
}
