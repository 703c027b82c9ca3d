//! Layers with cached forward passes and hand-written backward passes.

mod activation;
mod batchnorm;
mod conv;
mod dense;
mod dropout;
mod shape;
mod spec;

pub use activation::{sigmoid, silu, silu_grad};
pub use activation::{Activation, Pointwise, Relu, Sigmoid, Silu};
pub use batchnorm::BatchNorm1d;
pub use conv::Conv2d;
pub use dense::Dense;
pub use dropout::Dropout;
pub use shape::{Flatten, Reshape};
pub use spec::LayerSpec;

use rand::RngCore;

use crate::{Result, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// A trainable array and its accumulated gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub value: Tensor,
    pub grad: Tensor,
}

impl Param {
    pub fn new(value: Tensor) -> Self {
        let grad = Tensor::zeros(value.shape());
        Self { value, grad }
    }
}

pub trait Layer: Send + Sync {
    fn spec(&self) -> LayerSpec;

    /// Forward pass that keeps whatever the backward pass needs.
    fn forward(&mut self, input: &Tensor, mode: Mode, rng: &mut dyn RngCore) -> Result<Tensor>;

    /// Accumulates parameter gradients and returns the gradient with
    /// respect to the last forward input.
    fn backward(&mut self, grad_output: &Tensor) -> Result<Tensor>;

    /// Eval-mode forward pass without caching.
    fn infer(&self, input: &Tensor) -> Result<Tensor>;

    fn params(&self) -> Vec<(&'static str, &Param)> {
        Vec::new()
    }

    fn params_mut(&mut self) -> Vec<(&'static str, &mut Param)> {
        Vec::new()
    }

    /// Non-trainable state saved with the model (running statistics).
    fn buffers(&self) -> Vec<(&'static str, &Tensor)> {
        Vec::new()
    }

    fn buffers_mut(&mut self) -> Vec<(&'static str, &mut Tensor)> {
        Vec::new()
    }
}

/// Construct a freshly initialised layer.
pub fn build_layer(spec: &LayerSpec, rng: &mut dyn RngCore) -> Result<Box<dyn Layer>> {
    spec.validate()?;
    Ok(match *spec {
        LayerSpec::Conv2d {
            in_channels,
            out_channels,
            kernel,
        } => Box::new(Conv2d::new(in_channels, out_channels, kernel, rng)?),
        LayerSpec::Dense { inputs, outputs } => Box::new(Dense::new(inputs, outputs, rng)?),
        LayerSpec::Relu => Box::new(Relu::default()),
        LayerSpec::Silu => Box::new(Silu::default()),
        LayerSpec::Sigmoid => Box::new(Sigmoid::default()),
        LayerSpec::BatchNorm1d {
            features,
            momentum,
            epsilon,
        } => Box::new(BatchNorm1d::new(features, momentum, epsilon)?),
        LayerSpec::Dropout { rate } => Box::new(Dropout::new(rate)?),
        LayerSpec::Flatten => Box::new(Flatten::default()),
        LayerSpec::Reshape { ref dims } => Box::new(Reshape::new(dims)?),
    })
}
