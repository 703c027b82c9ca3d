use rand::RngCore;

use super::{Layer, LayerSpec, Mode};
use crate::error::shape_mismatch;
use crate::{Error, Result, Tensor};

/// `(B, d1, d2, …) → (B, d1·d2·…)`.
#[derive(Clone, Debug, Default)]
pub struct Flatten {
    input_shape: Option<Vec<usize>>,
}

impl Layer for Flatten {
    fn spec(&self) -> LayerSpec {
        LayerSpec::Flatten
    }

    fn forward(&mut self, input: &Tensor, _mode: Mode, _rng: &mut dyn RngCore) -> Result<Tensor> {
        self.input_shape = Some(input.shape().to_vec());
        self.infer(input)
    }

    fn backward(&mut self, grad_output: &Tensor) -> Result<Tensor> {
        let shape = self.input_shape.as_ref().ok_or(Error::NoForwardCache("flatten"))?;
        grad_output.clone().reshape(shape)
    }

    fn infer(&self, input: &Tensor) -> Result<Tensor> {
        if input.shape().is_empty() {
            return shape_mismatch("flatten", &[0, 0], input.shape());
        }
        input.clone().reshape(&[input.batch(), input.row_len()])
    }
}

/// `(B, …) → (B, dims…)` with the per-record size preserved.
#[derive(Clone, Debug)]
pub struct Reshape {
    dims: Vec<usize>,
    input_shape: Option<Vec<usize>>,
}

impl Reshape {
    pub fn new(dims: &[usize]) -> Result<Self> {
        LayerSpec::Reshape { dims: dims.to_vec() }.validate()?;
        Ok(Self {
            dims: dims.to_vec(),
            input_shape: None,
        })
    }
}

impl Layer for Reshape {
    fn spec(&self) -> LayerSpec {
        LayerSpec::Reshape {
            dims: self.dims.clone(),
        }
    }

    fn forward(&mut self, input: &Tensor, _mode: Mode, _rng: &mut dyn RngCore) -> Result<Tensor> {
        let out = self.infer(input)?;
        self.input_shape = Some(input.shape().to_vec());
        Ok(out)
    }

    fn backward(&mut self, grad_output: &Tensor) -> Result<Tensor> {
        let shape = self.input_shape.as_ref().ok_or(Error::NoForwardCache("reshape"))?;
        grad_output.clone().reshape(shape)
    }

    fn infer(&self, input: &Tensor) -> Result<Tensor> {
        let mut shape = vec![input.batch()];
        shape.extend_from_slice(&self.dims);
        if input.shape().is_empty() || input.row_len() != self.dims.iter().product::<usize>() {
            return shape_mismatch("reshape", &shape, input.shape());
        }
        input.clone().reshape(&shape)
    }
}
