use chronos_core::protocol::{Label, TrajectoryRecord};
use chronos_core::rng::{self, tag};
use chronos_nn::ModelCheckpoint;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{class_of, load_denoiser, Denoiser, FusedDenoiser, NoiseSchedule, Scratch};
use crate::{Error, Result};

/// Reverse chains are run in blocks of this many samples, each block on its
/// own random stream.
pub const SAMPLE_CHUNK: usize = 1024;

/// Draws `count` records of direction `label` from a trained checkpoint.
pub fn sample_trajectories(
    ckpt: &ModelCheckpoint,
    schedule: &NoiseSchedule,
    label: Label,
    count: usize,
    seed: u64,
) -> Result<Vec<TrajectoryRecord>> {
    if ckpt.epoch == 0 {
        return Err(Error::InvalidData("the denoiser checkpoint is untrained".into()));
    }
    let (model, _) = load_denoiser(ckpt)?;
    sample_from_model(&model, schedule, label, count, seed)
}

/// Reverse process from white noise:
/// `x_{l−1} = (x_l − β_l/√(1−ᾱ_l)·ε̂) / √(1−β_l) + √β_l·z`, with no noise on
/// the last step, then `x ≥ 0 → 1`, `x < 0 → 0`.
pub fn sample_from_model(
    model: &Denoiser,
    schedule: &NoiseSchedule,
    label: Label,
    count: usize,
    seed: u64,
) -> Result<Vec<TrajectoryRecord>> {
    let class = class_of(label)?;
    if class >= model.classes() {
        return Err(Error::InvalidArgument(format!("the denoiser has no class {class}")));
    }
    let fused = model.fused(schedule.steps())?;
    let n_qubits = model.n_qubits();
    let starts: Vec<usize> = (0..count).step_by(SAMPLE_CHUNK).collect();
    let blocks = starts
        .into_par_iter()
        .map(|start| {
            let rows = SAMPLE_CHUNK.min(count - start);
            let index = ((class as u64) << 40) | (start / SAMPLE_CHUNK) as u64;
            let mut r = rng::task_stream(seed, tag::SAMPLING, index, 0);
            let bits = reverse_chain(&fused, schedule, class, rows, &mut r);
            bits.chunks_exact(fused.data_dim())
                .map(|b| Ok(TrajectoryRecord::from_flat(n_qubits, b, label)?))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(blocks.concat())
}

fn reverse_chain<R: Rng>(
    model: &FusedDenoiser,
    schedule: &NoiseSchedule,
    class: usize,
    rows: usize,
    r: &mut R,
) -> Vec<u8> {
    let d = model.data_dim();
    let mut x: Vec<f64> = (0..rows * d).map(|_| r.sample(StandardNormal)).collect();
    let mut eps = vec![0.0; rows * d];
    let mut scratch = Scratch::default();
    for l in (1..=schedule.steps()).rev() {
        model.predict(&x, rows, l, class, &mut scratch, &mut eps);
        let beta = schedule.betas()[l - 1];
        let ab = schedule.alpha_bars()[l - 1];
        let coef = beta / (1.0 - ab).sqrt();
        let scale = 1.0 / (1.0 - beta).sqrt();
        let sigma = beta.sqrt();
        for (xi, ei) in x.iter_mut().zip(&eps) {
            *xi = (*xi - coef * ei) * scale;
            if l > 1 {
                *xi += sigma * r.sample::<f64, _>(StandardNormal);
            }
        }
    }
    x.iter().map(|&v| u8::from(v >= 0.0)).collect()
}
