//! Central-difference gradient checking.

use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};

use crate::layers::{Layer, Mode, Param};
use crate::{Result, Sequential, Tensor};

#[derive(Clone, Copy, Debug)]
pub struct GradCheckConfig {
    /// Finite-difference step.
    pub step: f64,
    /// Errors are `|analytic − numeric| / max(|analytic|, |numeric|, floor)`.
    pub floor: f64,
    /// Check at most this many entries per array (chosen at random).
    pub entries_per_array: usize,
    /// Seed for entry selection.
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            step: 1e-4,
            floor: 1e-6,
            entries_per_array: usize::MAX,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_relative_error: f64,
    /// Name and index of the entry with the largest error.
    pub worst: String,
    /// Entries whose loss is not differentiable within ±step (a ReLU kink
    /// was crossed); excluded from the maximum.
    pub kinks: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.checked > 0 && self.max_relative_error < tolerance && self.kinks * 20 <= self.checked
    }

    fn record(&mut self, cfg: &GradCheckConfig, name: &str, index: usize, analytic: f64, numeric: f64) {
        let denom = analytic.abs().max(numeric.abs()).max(cfg.floor);
        let err = (analytic - numeric).abs() / denom;
        self.checked += 1;
        if err > self.max_relative_error || self.worst.is_empty() {
            self.max_relative_error = self.max_relative_error.max(err);
            if err >= self.max_relative_error {
                self.worst = format!("{name}[{index}]: analytic {analytic:e}, numeric {numeric:e}");
            }
        }
    }
}

/// Anything with an ordered list of trainable parameters.
pub trait Differentiable {
    fn parameters(&mut self) -> Vec<(String, &mut Param)>;
}

impl Differentiable for Sequential {
    fn parameters(&mut self) -> Vec<(String, &mut Param)> {
        self.named_params_mut()
    }
}

impl Differentiable for dyn Layer + '_ {
    fn parameters(&mut self) -> Vec<(String, &mut Param)> {
        self.params_mut().into_iter().map(|(n, p)| (n.to_string(), p)).collect()
    }
}

/// Compare analytic and central-difference gradients of a scalar objective.
///
/// `objective(model, input, backward)` must return the loss and, when
/// `backward` is set, accumulate parameter gradients and return the input
/// gradient. It must be deterministic (reseed any dropout rng inside).
pub fn check_gradients<M, F>(
    model: &mut M,
    input: &Tensor,
    cfg: &GradCheckConfig,
    mut objective: F,
) -> Result<GradCheckReport>
where
    M: Differentiable + ?Sized,
    F: FnMut(&mut M, &Tensor, bool) -> Result<(f64, Option<Tensor>)>,
{
    for (_, p) in model.parameters() {
        p.grad.fill(0.0);
    }
    let (base, input_grad) = objective(model, input, true)?;
    let analytic: Vec<(String, Vec<f64>)> = model
        .parameters()
        .into_iter()
        .map(|(n, p)| (n, p.grad.data().to_vec()))
        .collect();
    let mut report = GradCheckReport::default();
    let mut pick = rand::rngs::StdRng::seed_from_u64(cfg.seed);
    let h = cfg.step;

    let numeric = |report: &mut GradCheckReport, name: &str, index: usize, analytic: f64, plus: f64, minus: f64| {
        let curvature = (plus + minus - 2.0 * base).abs();
        let kink = curvature > 1e-6 * (1.0 + base.abs()) && curvature > 0.1 * (plus - minus).abs();
        if kink {
            report.kinks += 1;
        } else {
            report.record(cfg, name, index, analytic, (plus - minus) / (2.0 * h));
        }
    };

    for (a, (name, grads)) in analytic.iter().enumerate() {
        for index in entries(grads.len(), cfg.entries_per_array, &mut pick) {
            let mut eval = |delta: f64, model: &mut M| -> Result<f64> {
                {
                    let mut params = model.parameters();
                    params[a].1.value.data_mut()[index] += delta;
                }
                let (loss, _) = objective(model, input, false)?;
                model.parameters()[a].1.value.data_mut()[index] -= delta;
                Ok(loss)
            };
            let plus = eval(h, model)?;
            let minus = eval(-h, model)?;
            numeric(&mut report, name, index, grads[index], plus, minus);
        }
    }

    if let Some(gx) = input_grad {
        let mut x = input.clone();
        for index in entries(x.len(), cfg.entries_per_array, &mut pick) {
            let orig = x.data()[index];
            x.data_mut()[index] = orig + h;
            let plus = objective(model, &x, false)?.0;
            x.data_mut()[index] = orig - h;
            let minus = objective(model, &x, false)?.0;
            x.data_mut()[index] = orig;
            numeric(&mut report, "input", index, gx.data()[index], plus, minus);
        }
    }
    Ok(report)
}

fn entries(len: usize, limit: usize, rng: &mut impl Rng) -> Vec<usize> {
    if len <= limit {
        (0..len).collect()
    } else {
        let mut v = sample(rng, len, limit).into_vec();
        v.sort_unstable();
        v
    }
}

/// Fixed random weights `w`; the objective is `Σ w·output`.
pub fn random_projection(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Gradient check of a single layer (or whole model) under the projection
/// objective. In training mode the rng is reseeded for every evaluation, so
/// a dropout mask stays frozen across the finite differences.
pub fn check_layer(
    layer: &mut dyn Layer,
    input: &Tensor,
    mode: Mode,
    seed: u64,
    cfg: &GradCheckConfig,
) -> Result<GradCheckReport> {
    let mut weights: Option<Vec<f64>> = None;
    check_gradients(layer, input, cfg, |layer, x, backward| {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let out = layer.forward(x, mode, &mut rng as &mut dyn RngCore)?;
        let w = weights.get_or_insert_with(|| random_projection(out.len(), seed));
        let loss = out.data().iter().zip(w.iter()).map(|(a, b)| a * b).sum();
        if !backward {
            return Ok((loss, None));
        }
        let g = Tensor::new(out.shape(), w.clone())?;
        Ok((loss, Some(layer.backward(&g)?)))
    })
}

/// [`check_layer`] for a [`Sequential`] model.
pub fn check_sequential(
    model: &mut Sequential,
    input: &Tensor,
    mode: Mode,
    seed: u64,
    cfg: &GradCheckConfig,
) -> Result<GradCheckReport> {
    let mut weights: Option<Vec<f64>> = None;
    check_gradients(model, input, cfg, |model, x, backward| {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let out = model.forward(x, mode, &mut rng)?;
        let w = weights.get_or_insert_with(|| random_projection(out.len(), seed));
        let loss = out.data().iter().zip(w.iter()).map(|(a, b)| a * b).sum();
        if !backward {
            return Ok((loss, None));
        }
        let g = Tensor::new(out.shape(), w.clone())?;
        Ok((loss, Some(model.backward(&g)?)))
    })
}
