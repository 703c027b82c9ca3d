use rand::RngCore;

use super::{Layer, LayerSpec, Mode, Param};
use crate::error::shape_mismatch;
use crate::{xavier_init, Error, Result, Tensor};

/// Stride-1, unpadded 2-D cross-correlation on `(B, C, H, W)` input.
#[derive(Clone, Debug)]
pub struct Conv2d {
    /// `(out_channels, in_channels, kh, kw)`
    pub weight: Param,
    pub bias: Param,
    input: Option<Tensor>,
}

impl Conv2d {
    pub fn new(in_channels: usize, out_channels: usize, kernel: (usize, usize), rng: &mut dyn RngCore) -> Result<Self> {
        LayerSpec::Conv2d {
            in_channels,
            out_channels,
            kernel,
        }
        .validate()?;
        let weight = xavier_init(&[out_channels, in_channels, kernel.0, kernel.1], rng)?;
        Ok(Self::from_params(weight, Tensor::zeros(&[out_channels])))
    }

    pub fn from_params(weight: Tensor, bias: Tensor) -> Self {
        Self {
            weight: Param::new(weight),
            bias: Param::new(bias),
            input: None,
        }
    }

    fn dims(&self) -> [usize; 4] {
        let s = self.weight.value.shape();
        [s[0], s[1], s[2], s[3]]
    }

    /// Output `(B, C_out, H_out, W_out)` for a validated input.
    fn output_shape(&self, input: &Tensor) -> Result<[usize; 4]> {
        let [co, ci, kh, kw] = self.dims();
        let s = input.shape();
        if s.len() != 4 || s[1] != ci || s[2] < kh || s[3] < kw {
            return shape_mismatch("conv2d", &[input.batch(), ci, kh, kw], s);
        }
        Ok([s[0], co, s[2] - kh + 1, s[3] - kw + 1])
    }
}

impl Layer for Conv2d {
    fn spec(&self) -> LayerSpec {
        let [co, ci, kh, kw] = self.dims();
        LayerSpec::Conv2d {
            in_channels: ci,
            out_channels: co,
            kernel: (kh, kw),
        }
    }

    fn forward(&mut self, input: &Tensor, _mode: Mode, _rng: &mut dyn RngCore) -> Result<Tensor> {
        let out = self.infer(input)?;
        self.input = Some(input.clone());
        Ok(out)
    }

    fn backward(&mut self, grad_output: &Tensor) -> Result<Tensor> {
        let input = self.input.as_ref().ok_or(Error::NoForwardCache("conv2d"))?;
        let [b, co, ho, wo] = self.output_shape(input)?;
        if grad_output.shape() != [b, co, ho, wo] {
            return shape_mismatch("conv2d backward", &[b, co, ho, wo], grad_output.shape());
        }
        let [_, ci, kh, kw] = self.dims();
        let (h, w) = (input.shape()[2], input.shape()[3]);
        let x = input.data();
        let g = grad_output.data();
        let wt = self.weight.value.data();
        let dw = self.weight.grad.data_mut();
        let mut dx = vec![0.0; x.len()];
        for n in 0..b {
            for o in 0..co {
                let g_map = &g[((n * co + o) * ho) * wo..((n * co + o) * ho + ho) * wo];
                self.bias.grad.data_mut()[o] += g_map.iter().sum::<f64>();
                for c in 0..ci {
                    let x_base = (n * ci + c) * h * w;
                    for u in 0..kh {
                        for v in 0..kw {
                            let k = ((o * ci + c) * kh + u) * kw + v;
                            let mut acc = 0.0;
                            for r in 0..ho {
                                for s in 0..wo {
                                    let xi = x_base + (r + u) * w + s + v;
                                    acc += g_map[r * wo + s] * x[xi];
                                    dx[xi] += g_map[r * wo + s] * wt[k];
                                }
                            }
                            dw[k] += acc;
                        }
                    }
                }
            }
        }
        Tensor::new(input.shape(), dx)
    }

    fn infer(&self, input: &Tensor) -> Result<Tensor> {
        let [b, co, ho, wo] = self.output_shape(input)?;
        let [_, ci, kh, kw] = self.dims();
        let (h, w) = (input.shape()[2], input.shape()[3]);
        let x = input.data();
        let wt = self.weight.value.data();
        let mut out = vec![0.0; b * co * ho * wo];
        for n in 0..b {
            for o in 0..co {
                let map = &mut out[((n * co + o) * ho) * wo..((n * co + o) * ho + ho) * wo];
                map.fill(self.bias.value.data()[o]);
                for c in 0..ci {
                    let x_base = (n * ci + c) * h * w;
                    for u in 0..kh {
                        for v in 0..kw {
                            let k = wt[((o * ci + c) * kh + u) * kw + v];
                            for r in 0..ho {
                                let row = x_base + (r + u) * w + v;
                                for s in 0..wo {
                                    map[r * wo + s] += k * x[row + s];
                                }
                            }
                        }
                    }
                }
            }
        }
        Tensor::new(&[b, co, ho, wo], out)
    }

    fn params(&self) -> Vec<(&'static str, &Param)> {
        vec![("weight", &self.weight), ("bias", &self.bias)]
    }

    fn params_mut(&mut self) -> Vec<(&'static str, &mut Param)> {
        vec![("weight", &mut self.weight), ("bias", &mut self.bias)]
    }
}
