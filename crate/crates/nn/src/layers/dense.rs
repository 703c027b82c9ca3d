use rand::RngCore;

use super::{Layer, LayerSpec, Mode, Param};
use crate::error::shape_mismatch;
use crate::tensor::gemm;
use crate::{xavier_init, Error, Result, Tensor};

/// `y = x Wᵀ + b` with `W: (outputs, inputs)`.
#[derive(Clone, Debug)]
pub struct Dense {
    pub weight: Param,
    pub bias: Param,
    input: Option<Tensor>,
}

impl Dense {
    /// Xavier-uniform weights, zero bias.
    pub fn new(inputs: usize, outputs: usize, rng: &mut dyn RngCore) -> Result<Self> {
        LayerSpec::Dense { inputs, outputs }.validate()?;
        Ok(Self::from_params(
            xavier_init(&[outputs, inputs], rng)?,
            Tensor::zeros(&[outputs]),
        ))
    }

    pub fn from_params(weight: Tensor, bias: Tensor) -> Self {
        Self {
            weight: Param::new(weight),
            bias: Param::new(bias),
            input: None,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.value.shape()[1]
    }

    pub fn outputs(&self) -> usize {
        self.weight.value.shape()[0]
    }

    fn check(&self, input: &Tensor) -> Result<usize> {
        if input.shape().len() != 2 || input.shape()[1] != self.inputs() {
            return shape_mismatch("dense", &[input.batch(), self.inputs()], input.shape());
        }
        Ok(input.batch())
    }
}

impl Layer for Dense {
    fn spec(&self) -> LayerSpec {
        LayerSpec::Dense {
            inputs: self.inputs(),
            outputs: self.outputs(),
        }
    }

    fn forward(&mut self, input: &Tensor, _mode: Mode, _rng: &mut dyn RngCore) -> Result<Tensor> {
        let out = self.infer(input)?;
        self.input = Some(input.clone());
        Ok(out)
    }

    fn backward(&mut self, grad_output: &Tensor) -> Result<Tensor> {
        let input = self.input.as_ref().ok_or(Error::NoForwardCache("dense"))?;
        let (b, i, o) = (input.batch(), self.inputs(), self.outputs());
        if grad_output.shape() != [b, o] {
            return shape_mismatch("dense backward", &[b, o], grad_output.shape());
        }
        let g = grad_output.data();
        // dW += gᵀ x
        gemm(o, b, i, g, true, input.data(), false, self.weight.grad.data_mut(), true);
        let db = self.bias.grad.data_mut();
        for row in g.chunks_exact(o) {
            db.iter_mut().zip(row).for_each(|(d, x)| *d += x);
        }
        let mut dx = vec![0.0; b * i];
        gemm(b, o, i, g, false, self.weight.value.data(), false, &mut dx, false);
        Tensor::new(&[b, i], dx)
    }

    fn infer(&self, input: &Tensor) -> Result<Tensor> {
        let b = self.check(input)?;
        let o = self.outputs();
        let mut out = Vec::with_capacity(b * o);
        for _ in 0..b {
            out.extend_from_slice(self.bias.value.data());
        }
        gemm(
            b,
            self.inputs(),
            o,
            input.data(),
            false,
            self.weight.value.data(),
            true,
            &mut out,
            true,
        );
        Tensor::new(&[b, o], out)
    }

    fn params(&self) -> Vec<(&'static str, &Param)> {
        vec![("weight", &self.weight), ("bias", &self.bias)]
    }

    fn params_mut(&mut self) -> Vec<(&'static str, &mut Param)> {
        vec![("weight", &mut self.weight), ("bias", &mut self.bias)]
    }
}
