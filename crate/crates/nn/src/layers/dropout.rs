use rand::{Rng, RngCore};

use super::{Layer, LayerSpec, Mode};
use crate::error::shape_mismatch;
use crate::{Error, Result, Tensor};

/// Inverted dropout: in training each value is kept with probability
/// `1 − rate` and scaled by `1/(1 − rate)`; evaluation is the identity.
///
/// The mask draws one `f64` per element, in row-major order, from the rng
/// passed to `forward`; an element is dropped when the draw is `< rate`.
#[derive(Clone, Debug)]
pub struct Dropout {
    rate: f64,
    mask: Option<Tensor>,
}

impl Dropout {
    pub fn new(rate: f64) -> Result<Self> {
        LayerSpec::Dropout { rate }.validate()?;
        Ok(Self { rate, mask: None })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

impl Layer for Dropout {
    fn spec(&self) -> LayerSpec {
        LayerSpec::Dropout { rate: self.rate }
    }

    fn forward(&mut self, input: &Tensor, mode: Mode, rng: &mut dyn RngCore) -> Result<Tensor> {
        let scale = 1.0 / (1.0 - self.rate);
        let mask = match mode {
            Mode::Eval => Tensor::filled(input.shape(), 1.0),
            Mode::Train => {
                let mut m = Tensor::zeros(input.shape());
                for v in m.data_mut() {
                    *v = if rng.random::<f64>() < self.rate { 0.0 } else { scale };
                }
                m
            }
        };
        let mut out = input.clone();
        out.data_mut().iter_mut().zip(mask.data()).for_each(|(x, m)| *x *= m);
        self.mask = Some(mask);
        Ok(out)
    }

    fn backward(&mut self, grad_output: &Tensor) -> Result<Tensor> {
        let mask = self.mask.as_ref().ok_or(Error::NoForwardCache("dropout"))?;
        if mask.shape() != grad_output.shape() {
            return shape_mismatch("dropout backward", mask.shape(), grad_output.shape());
        }
        let mut dx = grad_output.clone();
        dx.data_mut().iter_mut().zip(mask.data()).for_each(|(g, m)| *g *= m);
        Ok(dx)
    }

    fn infer(&self, input: &Tensor) -> Result<Tensor> {
        Ok(input.clone())
    }
}
