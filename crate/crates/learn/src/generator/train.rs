use chronos_core::protocol::{Label, TrajectoryRecord};
use chronos_core::rng::{self, tag};
use chronos_core::thermo::{dataset_fidelity, DatasetFidelity};
use chronos_nn::{mse_loss, Adam, AdamConfig, ModelCheckpoint, Tensor};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{
    build_denoiser, class_of, denoiser_checkpoint, label_of, sample_from_model, Denoiser, DiffusionConfig,
    NoiseSchedule, EPOCH_STREAM_BASE,
};
use crate::cluster::flatten_records;
use crate::{Error, Result};

/// Records as ±1 rows together with their class indices.
pub fn signed_inputs(dataset: &[TrajectoryRecord]) -> Result<(Tensor, Vec<usize>)> {
    let x = flatten_records(dataset)?.map(|v| 2.0 * v - 1.0);
    let classes = dataset.iter().map(|r| class_of(r.label())).collect::<Result<_>>()?;
    Ok((x, classes))
}

/// Noised batch `x_l` and its noise for per-row timesteps drawn uniformly
/// from `1..=L`.
fn noised_batch<R: Rng>(x0: &Tensor, schedule: &NoiseSchedule, rng: &mut R) -> (Tensor, Tensor, Vec<usize>) {
    let d = x0.row_len();
    let mut timesteps = Vec::with_capacity(x0.batch());
    let mut noise = Vec::with_capacity(x0.len());
    let mut noised = Vec::with_capacity(x0.len());
    for r in 0..x0.batch() {
        let l = rng.random_range(1..=schedule.steps());
        let ab = schedule.alpha_bars()[l - 1];
        let (a, b) = (ab.sqrt(), (1.0 - ab).sqrt());
        for &x in x0.row(r) {
            let e: f64 = rng.sample(StandardNormal);
            noise.push(e);
            noised.push(a * x + b * e);
        }
        timesteps.push(l);
    }
    let shape = [x0.batch(), d];
    (
        Tensor::new(&shape, noised).expect("batch shape"),
        Tensor::new(&shape, noise).expect("batch shape"),
        timesteps,
    )
}

/// Mean squared noise-prediction error on `dataset` with fresh draws from
/// `seed`, without touching gradients.
pub fn diffusion_loss(
    model: &Denoiser,
    dataset: &[TrajectoryRecord],
    schedule: &NoiseSchedule,
    seed: u64,
) -> Result<f64> {
    let (x, classes) = signed_inputs(dataset)?;
    if x.batch() == 0 {
        return Err(Error::InvalidData("no records to score".into()));
    }
    let mut r = rng::task_stream(seed, tag::MISC, 0, 0);
    let (xl, eps, timesteps) = noised_batch(&x, schedule, &mut r);
    let pred = model.infer(&xl, &timesteps, &classes)?;
    Ok(mse_loss(&pred, &eps)?.0)
}

/// Trains for `cfg.epochs` epochs; returns the final checkpoint and the mean
/// loss of each epoch.
pub fn train_diffusion(
    model: &mut Denoiser,
    dataset: &[TrajectoryRecord],
    schedule: &NoiseSchedule,
    cfg: &DiffusionConfig,
) -> Result<(ModelCheckpoint, Vec<f64>)> {
    train_diffusion_with(model, dataset, schedule, cfg, &mut |_, _| Ok(()))
}

/// As [`train_diffusion`], calling `observer(epoch, model)` before training
/// (epoch 0) and after every epoch.
pub fn train_diffusion_with(
    model: &mut Denoiser,
    dataset: &[TrajectoryRecord],
    schedule: &NoiseSchedule,
    cfg: &DiffusionConfig,
    observer: &mut dyn FnMut(usize, &Denoiser) -> Result<()>,
) -> Result<(ModelCheckpoint, Vec<f64>)> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::InvalidData("cannot train on an empty dataset".into()));
    }
    let (x, classes) = signed_inputs(dataset)?;
    if x.row_len() != model.data_dim() {
        return Err(Error::InvalidData(format!(
            "records have {} values, the denoiser expects {}",
            x.row_len(),
            model.data_dim()
        )));
    }
    let mut adam = Adam::new(AdamConfig::with_lr(cfg.lr));
    let mut history = Vec::with_capacity(cfg.epochs);
    let n = x.batch();
    observer(0, model)?;
    for epoch in 0..cfg.epochs {
        let mut r = rng::task_stream(cfg.seed, tag::TRAINING, EPOCH_STREAM_BASE + epoch as u64, 0);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut r);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let x0 = x.gather_rows(batch);
            let labels: Vec<usize> = batch.iter().map(|&i| classes[i]).collect();
            let (xl, eps, timesteps) = noised_batch(&x0, schedule, &mut r);
            model.zero_grad();
            let pred = model.forward(&xl, &timesteps, &labels)?;
            let (loss, grad) = mse_loss(&pred, &eps)?;
            if !loss.is_finite() {
                return Err(Error::Numeric(format!(
                    "diffusion loss became {loss} in epoch {}",
                    epoch + 1
                )));
            }
            model.backward(&grad)?;
            adam.step(model.named_params_mut().into_iter().map(|(_, p)| p))?;
            total += loss * batch.len() as f64;
        }
        history.push(total / n as f64);
        observer(epoch + 1, model)?;
    }
    Ok((denoiser_checkpoint(model, cfg, cfg.epochs, &history), history))
}

/// Per-step fidelity averaged over the direction labels present in
/// `generated`, each label compared with the same label in `reference`.
pub fn labelled_fidelity(generated: &[TrajectoryRecord], reference: &[TrajectoryRecord]) -> Result<DatasetFidelity> {
    let mut per_step: Vec<f64> = Vec::new();
    let mut labels = 0;
    for label in [Label::Forward, Label::Backward] {
        let pick = |d: &[TrajectoryRecord]| d.iter().filter(|r| r.label() == label).cloned().collect::<Vec<_>>();
        let g = pick(generated);
        if g.is_empty() {
            continue;
        }
        let r = pick(reference);
        if r.is_empty() {
            return Err(Error::InvalidData(format!(
                "reference has no {} records",
                label.as_str()
            )));
        }
        let f = dataset_fidelity(&g, &r)?;
        if per_step.is_empty() {
            per_step = f.per_step;
        } else {
            per_step.iter_mut().zip(&f.per_step).for_each(|(a, b)| *a += b);
        }
        labels += 1;
    }
    if labels == 0 {
        return Err(Error::InvalidData("no labelled generated records".into()));
    }
    per_step.iter_mut().for_each(|v| *v /= labels as f64);
    let mean = per_step.iter().sum::<f64>() / per_step.len() as f64;
    let var = per_step.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / per_step.len() as f64;
    Ok(DatasetFidelity {
        mean,
        per_step,
        std_across_steps: var.sqrt(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FidelityPoint {
    pub epoch: usize,
    pub mean: f64,
    pub std_across_steps: f64,
}

/// Trains a fresh denoiser on `dataset`, scoring [`labelled_fidelity`]
/// against it before training and every `eval_every` epochs (and after the
/// last one) from `per_label` samples of each direction.
pub fn fidelity_vs_epochs(
    dataset: &[TrajectoryRecord],
    cfg: &DiffusionConfig,
    eval_every: usize,
    per_label: usize,
) -> Result<(ModelCheckpoint, Vec<f64>, Vec<FidelityPoint>)> {
    if eval_every == 0 || per_label == 0 {
        return Err(Error::InvalidArgument(
            "eval_every and the sample count must be positive".into(),
        ));
    }
    let schedule = cfg.schedule()?;
    let mut model = build_denoiser(cfg)?;
    let mut curve = Vec::new();
    let mut observer = |epoch: usize, m: &Denoiser| -> Result<()> {
        if epoch % eval_every != 0 && epoch != cfg.epochs {
            return Ok(());
        }
        let mut generated = Vec::with_capacity(2 * per_label);
        for class in 0..2 {
            let seed = cfg.seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            generated.extend(sample_from_model(m, &schedule, label_of(class)?, per_label, seed)?);
        }
        let f = labelled_fidelity(&generated, dataset)?;
        curve.push(FidelityPoint {
            epoch,
            mean: f.mean,
            std_across_steps: f.std_across_steps,
        });
        Ok(())
    };
    let (ckpt, history) = train_diffusion_with(&mut model, dataset, &schedule, cfg, &mut observer)?;
    Ok((ckpt, history, curve))
}
