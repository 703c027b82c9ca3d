use rand::RngCore;

use super::{Layer, LayerSpec, Mode};
use crate::error::shape_mismatch;
use crate::{Error, Result, Tensor};

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn silu(x: f64) -> f64 {
    x * sigmoid(x)
}

/// d/dx of `x σ(x)`.
pub fn silu_grad(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 + x * (1.0 - s))
}

fn check_grad(name: &'static str, cached: &Tensor, grad: &Tensor) -> Result<()> {
    if cached.shape() != grad.shape() {
        return shape_mismatch(name, cached.shape(), grad.shape());
    }
    Ok(())
}

/// A pointwise nonlinearity and its derivative, written in terms of the
/// input `x` and output `y`.
pub trait Pointwise: Default + Send + Sync {
    const NAME: &'static str;
    fn spec() -> LayerSpec;
    fn value(x: f64) -> f64;
    fn derivative(x: f64, y: f64) -> f64;
}

#[derive(Clone, Debug)]
pub struct Activation<F: Pointwise> {
    cache: Option<(Tensor, Tensor)>,
    kind: std::marker::PhantomData<F>,
}

impl<F: Pointwise> Default for Activation<F> {
    fn default() -> Self {
        Self {
            cache: None,
            kind: std::marker::PhantomData,
        }
    }
}

impl<F: Pointwise> Layer for Activation<F> {
    fn spec(&self) -> LayerSpec {
        F::spec()
    }

    fn forward(&mut self, input: &Tensor, _mode: Mode, _rng: &mut dyn RngCore) -> Result<Tensor> {
        let out = input.map(F::value);
        self.cache = Some((input.clone(), out.clone()));
        Ok(out)
    }

    fn backward(&mut self, grad_output: &Tensor) -> Result<Tensor> {
        let (x, y) = self.cache.as_ref().ok_or(Error::NoForwardCache(F::NAME))?;
        check_grad(F::NAME, x, grad_output)?;
        let data = x
            .data()
            .iter()
            .zip(y.data())
            .zip(grad_output.data())
            .map(|((&x, &y), &g)| g * F::derivative(x, y))
            .collect();
        Tensor::new(x.shape(), data)
    }

    fn infer(&self, input: &Tensor) -> Result<Tensor> {
        Ok(input.map(F::value))
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ReluFn;

impl Pointwise for ReluFn {
    const NAME: &'static str = "relu";
    fn spec() -> LayerSpec {
        LayerSpec::Relu
    }
    fn value(x: f64) -> f64 {
        x.max(0.0)
    }
    fn derivative(x: f64, _y: f64) -> f64 {
        if x > 0.0 {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SiluFn;

impl Pointwise for SiluFn {
    const NAME: &'static str = "silu";
    fn spec() -> LayerSpec {
        LayerSpec::Silu
    }
    fn value(x: f64) -> f64 {
        silu(x)
    }
    fn derivative(x: f64, _y: f64) -> f64 {
        silu_grad(x)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SigmoidFn;

impl Pointwise for SigmoidFn {
    const NAME: &'static str = "sigmoid";
    fn spec() -> LayerSpec {
        LayerSpec::Sigmoid
    }
    fn value(x: f64) -> f64 {
        sigmoid(x)
    }
    fn derivative(_x: f64, y: f64) -> f64 {
        y * (1.0 - y)
    }
}

pub type Relu = Activation<ReluFn>;
pub type Silu = Activation<SiluFn>;
pub type Sigmoid = Activation<SigmoidFn>;
