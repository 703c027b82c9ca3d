use rand::RngCore;

use super::{Layer, LayerSpec, Mode, Param};
use crate::error::shape_mismatch;
use crate::{Error, Result, Tensor};

/// Per-feature normalisation of `(B, F)` input. Training uses batch
/// statistics (biased variance) and folds them into the running estimates
/// with `momentum`; evaluation uses the running estimates.
#[derive(Clone, Debug)]
pub struct BatchNorm1d {
    pub gamma: Param,
    pub beta: Param,
    pub running_mean: Tensor,
    pub running_var: Tensor,
    momentum: f64,
    epsilon: f64,
    cache: Option<Cache>,
}

#[derive(Clone, Debug)]
struct Cache {
    normalized: Tensor,
    inv_std: Vec<f64>,
    train: bool,
}

impl BatchNorm1d {
    pub fn new(features: usize, momentum: f64, epsilon: f64) -> Result<Self> {
        LayerSpec::BatchNorm1d {
            features,
            momentum,
            epsilon,
        }
        .validate()?;
        Ok(Self {
            gamma: Param::new(Tensor::filled(&[features], 1.0)),
            beta: Param::new(Tensor::zeros(&[features])),
            running_mean: Tensor::zeros(&[features]),
            running_var: Tensor::filled(&[features], 1.0),
            momentum,
            epsilon,
            cache: None,
        })
    }

    pub fn features(&self) -> usize {
        self.gamma.value.len()
    }

    fn check(&self, input: &Tensor) -> Result<()> {
        if input.shape().len() != 2 || input.shape()[1] != self.features() {
            return shape_mismatch("batchnorm1d", &[input.batch(), self.features()], input.shape());
        }
        Ok(())
    }

    fn normalize(&self, input: &Tensor, mean: &[f64], inv_std: &[f64]) -> (Tensor, Tensor) {
        let f = self.features();
        let mut normalized = input.clone();
        let mut out = input.clone();
        let (g, b) = (self.gamma.value.data(), self.beta.value.data());
        for (xr, yr) in normalized
            .data_mut()
            .chunks_exact_mut(f)
            .zip(out.data_mut().chunks_exact_mut(f))
        {
            for j in 0..f {
                xr[j] = (xr[j] - mean[j]) * inv_std[j];
                yr[j] = g[j] * xr[j] + b[j];
            }
        }
        (normalized, out)
    }
}

impl Layer for BatchNorm1d {
    fn spec(&self) -> LayerSpec {
        LayerSpec::BatchNorm1d {
            features: self.features(),
            momentum: self.momentum,
            epsilon: self.epsilon,
        }
    }

    fn forward(&mut self, input: &Tensor, mode: Mode, _rng: &mut dyn RngCore) -> Result<Tensor> {
        self.check(input)?;
        let (n, f) = (input.batch(), self.features());
        let (mean, var) = match mode {
            Mode::Eval => (self.running_mean.data().to_vec(), self.running_var.data().to_vec()),
            Mode::Train => {
                if n < 2 {
                    return Err(Error::InvalidArgument(
                        "batch normalisation needs at least two records in training".into(),
                    ));
                }
                let mut mean = vec![0.0; f];
                for row in input.data().chunks_exact(f) {
                    mean.iter_mut().zip(row).for_each(|(m, x)| *m += x);
                }
                mean.iter_mut().for_each(|m| *m /= n as f64);
                let mut var = vec![0.0; f];
                for row in input.data().chunks_exact(f) {
                    for j in 0..f {
                        var[j] += (row[j] - mean[j]).powi(2);
                    }
                }
                var.iter_mut().for_each(|v| *v /= n as f64);
                let unbias = n as f64 / (n - 1) as f64;
                let m = self.momentum;
                for j in 0..f {
                    let rm = &mut self.running_mean.data_mut()[j];
                    *rm = (1.0 - m) * *rm + m * mean[j];
                    let rv = &mut self.running_var.data_mut()[j];
                    *rv = (1.0 - m) * *rv + m * var[j] * unbias;
                }
                (mean, var)
            }
        };
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + self.epsilon).sqrt()).collect();
        let (normalized, out) = self.normalize(input, &mean, &inv_std);
        self.cache = Some(Cache {
            normalized,
            inv_std,
            train: mode == Mode::Train,
        });
        Ok(out)
    }

    fn backward(&mut self, grad_output: &Tensor) -> Result<Tensor> {
        let cache = self.cache.as_ref().ok_or(Error::NoForwardCache("batchnorm1d"))?;
        if grad_output.shape() != cache.normalized.shape() {
            return shape_mismatch("batchnorm1d backward", cache.normalized.shape(), grad_output.shape());
        }
        let f = self.features();
        let n = grad_output.batch() as f64;
        let xhat = cache.normalized.data();
        let g = grad_output.data();
        let mut sum_g = vec![0.0; f];
        let mut sum_gx = vec![0.0; f];
        for (gr, xr) in g.chunks_exact(f).zip(xhat.chunks_exact(f)) {
            for j in 0..f {
                sum_g[j] += gr[j];
                sum_gx[j] += gr[j] * xr[j];
            }
        }
        for j in 0..f {
            self.gamma.grad.data_mut()[j] += sum_gx[j];
            self.beta.grad.data_mut()[j] += sum_g[j];
        }
        let gamma = self.gamma.value.data();
        let mut dx = vec![0.0; g.len()];
        for ((dr, gr), xr) in dx.chunks_exact_mut(f).zip(g.chunks_exact(f)).zip(xhat.chunks_exact(f)) {
            for j in 0..f {
                let scale = gamma[j] * cache.inv_std[j];
                dr[j] = if cache.train {
                    scale * (gr[j] - sum_g[j] / n - xr[j] * sum_gx[j] / n)
                } else {
                    scale * gr[j]
                };
            }
        }
        Tensor::new(grad_output.shape(), dx)
    }

    fn infer(&self, input: &Tensor) -> Result<Tensor> {
        self.check(input)?;
        let inv_std: Vec<f64> = self
            .running_var
            .data()
            .iter()
            .map(|v| 1.0 / (v + self.epsilon).sqrt())
            .collect();
        Ok(self.normalize(input, self.running_mean.data(), &inv_std).1)
    }

    fn params(&self) -> Vec<(&'static str, &Param)> {
        vec![("gamma", &self.gamma), ("beta", &self.beta)]
    }

    fn params_mut(&mut self) -> Vec<(&'static str, &mut Param)> {
        vec![("gamma", &mut self.gamma), ("beta", &mut self.beta)]
    }

    fn buffers(&self) -> Vec<(&'static str, &Tensor)> {
        vec![("running_mean", &self.running_mean), ("running_var", &self.running_var)]
    }

    fn buffers_mut(&mut self) -> Vec<(&'static str, &mut Tensor)> {
        vec![
            ("running_mean", &mut self.running_mean),
            ("running_var", &mut self.running_var),
        ]
    }
}
