use rand::{Rng, RngCore};

use crate::{Error, Result, Tensor};

/// `(fan_in, fan_out)` for a weight of shape `(out, in, k…)`.
pub fn fans(shape: &[usize]) -> Result<(usize, usize)> {
    if shape.len() < 2 || shape.contains(&0) {
        return Err(Error::InvalidArgument(format!(
            "Xavier initialisation needs a 2-D or higher shape with no empty axis, got {shape:?}"
        )));
    }
    let receptive: usize = shape[2..].iter().product();
    Ok((shape[1] * receptive, shape[0] * receptive))
}

/// Uniform in `±√(6/(fan_in + fan_out))`.
pub fn xavier_init(shape: &[usize], rng: &mut dyn RngCore) -> Result<Tensor> {
    let (fan_in, fan_out) = fans(shape)?;
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.random_range(-bound..=bound)).collect();
    Tensor::new(shape, data)
}
