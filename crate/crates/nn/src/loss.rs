use crate::error::shape_mismatch;
use crate::{Error, Result, Tensor};

/// Predictions are clamped into `[BCE_CLAMP, 1 − BCE_CLAMP]` before the log.
pub const BCE_CLAMP: f64 = 1e-7;

/// Mean binary cross-entropy and its gradient with respect to the
/// predictions. Targets must be exactly 0 or 1.
pub fn bce_loss(predictions: &Tensor, targets: &Tensor) -> Result<(f64, Tensor)> {
    if predictions.len() != targets.len() {
        return shape_mismatch("bce_loss", predictions.shape(), targets.shape());
    }
    if let Some(t) = targets.data().iter().find(|&&t| t != 0.0 && t != 1.0) {
        return Err(Error::InvalidArgument(format!("target {t} is not 0 or 1")));
    }
    let n = predictions.len().max(1) as f64;
    let mut loss = 0.0;
    let mut grad = Tensor::zeros(predictions.shape());
    for ((g, &p), &y) in grad.data_mut().iter_mut().zip(predictions.data()).zip(targets.data()) {
        let p = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
        if y == 1.0 {
            loss -= p.ln();
            *g = -1.0 / (p * n);
        } else {
            loss -= (1.0 - p).ln();
            *g = 1.0 / ((1.0 - p) * n);
        }
    }
    Ok((loss / n, grad))
}

/// Mean squared error and its gradient `2(pred − target)/count`.
pub fn mse_loss(predictions: &Tensor, targets: &Tensor) -> Result<(f64, Tensor)> {
    if predictions.shape() != targets.shape() {
        return shape_mismatch("mse_loss", predictions.shape(), targets.shape());
    }
    let n = predictions.len().max(1) as f64;
    let mut loss = 0.0;
    let mut grad = Tensor::zeros(predictions.shape());
    for ((g, &p), &t) in grad.data_mut().iter_mut().zip(predictions.data()).zip(targets.data()) {
        let d = p - t;
        loss += d * d;
        *g = 2.0 * d / n;
    }
    Ok((loss / n, grad))
}
