use rand::{RngCore, SeedableRng};

use crate::checkpoint::{ModelCheckpoint, NamedArray};
use crate::layers::{build_layer, Layer, LayerSpec, Mode, Param};
use crate::{Error, Result, Tensor};

/// Layers applied in order.
#[derive(Default)]
pub struct Sequential {
    layers: Vec<Box<dyn Layer>>,
}

impl Sequential {
    pub fn new(layers: Vec<Box<dyn Layer>>) -> Self {
        Self { layers }
    }

    pub fn from_specs(specs: &[LayerSpec], rng: &mut dyn RngCore) -> Result<Self> {
        let layers = specs.iter().map(|s| build_layer(s, rng)).collect::<Result<Vec<_>>>()?;
        Ok(Self { layers })
    }

    pub fn push(&mut self, layer: Box<dyn Layer>) {
        self.layers.push(layer);
    }

    pub fn layers(&self) -> &[Box<dyn Layer>] {
        &self.layers
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec()).collect()
    }

    pub fn forward(&mut self, input: &Tensor, mode: Mode, rng: &mut dyn RngCore) -> Result<Tensor> {
        let mut x = input.clone();
        for layer in &mut self.layers {
            x = layer.forward(&x, mode, rng)?;
        }
        Ok(x)
    }

    /// Backpropagate through every layer; returns the input gradient.
    pub fn backward(&mut self, grad_output: &Tensor) -> Result<Tensor> {
        let mut g = grad_output.clone();
        for layer in self.layers.iter_mut().rev() {
            g = layer.backward(&g)?;
        }
        Ok(g)
    }

    /// Eval-mode pass with no side effects; safe to share across threads.
    pub fn infer(&self, input: &Tensor) -> Result<Tensor> {
        let mut x = input.clone();
        for layer in &self.layers {
            x = layer.infer(&x)?;
        }
        Ok(x)
    }

    pub fn zero_grad(&mut self) {
        for (_, p) in self.named_params_mut() {
            p.grad.fill(0.0);
        }
    }

    pub fn param_count(&self) -> usize {
        self.named_params().iter().map(|(_, p)| p.value.len()).sum()
    }

    /// Parameters named `<position>.<kind>.<name>`.
    pub fn named_params(&self) -> Vec<(String, &Param)> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            let kind = layer.spec().name();
            for (name, p) in layer.params() {
                out.push((format!("{i}.{kind}.{name}"), p));
            }
        }
        out
    }

    pub fn named_params_mut(&mut self) -> Vec<(String, &mut Param)> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter_mut().enumerate() {
            let kind = layer.spec().name();
            for (name, p) in layer.params_mut() {
                out.push((format!("{i}.{kind}.{name}"), p));
            }
        }
        out
    }

    /// Parameters followed by buffers, as checkpoint arrays.
    pub fn state_arrays(&self) -> Vec<NamedArray> {
        let mut out: Vec<NamedArray> = self
            .named_params()
            .into_iter()
            .map(|(name, p)| NamedArray::from_tensor(name, &p.value))
            .collect();
        for (i, layer) in self.layers.iter().enumerate() {
            let kind = layer.spec().name();
            for (name, t) in layer.buffers() {
                out.push(NamedArray::from_tensor(format!("{i}.{kind}.{name}"), t));
            }
        }
        out
    }

    /// Overwrite parameters and buffers from `arrays`; every name must be
    /// present with the shape the layer expects.
    pub fn load_state(&mut self, arrays: &[NamedArray]) -> Result<()> {
        let lookup = |name: &str| -> Result<&NamedArray> {
            arrays
                .iter()
                .find(|a| a.name == name)
                .ok_or_else(|| Error::InvalidArgument(format!("missing array '{name}'")))
        };
        let mut expected = 0;
        for (i, layer) in self.layers.iter_mut().enumerate() {
            let kind = layer.spec().name();
            let targets: Vec<(String, &mut Tensor)> = layer
                .params_mut()
                .into_iter()
                .map(|(name, p)| (format!("{i}.{kind}.{name}"), &mut p.value))
                .collect();
            for (name, t) in targets {
                lookup(&name)?.copy_into(t)?;
                expected += 1;
            }
            for (name, t) in layer.buffers_mut() {
                lookup(&format!("{i}.{kind}.{name}"))?.copy_into(t)?;
                expected += 1;
            }
        }
        if expected != arrays.len() {
            return Err(Error::InvalidArgument(format!(
                "checkpoint holds {} arrays, model uses {expected}",
                arrays.len()
            )));
        }
        Ok(())
    }

    pub fn to_checkpoint(&self, model_kind: &str) -> ModelCheckpoint {
        ModelCheckpoint {
            model_kind: model_kind.to_string(),
            layers: self.specs(),
            arrays: self.state_arrays(),
            ..ModelCheckpoint::default()
        }
    }

    /// Rebuild from the layer specs in `checkpoint` and load its arrays.
    pub fn from_checkpoint(checkpoint: &ModelCheckpoint) -> Result<Self> {
        let mut rng = rand::rngs::StdRng::seed_from_u64(0);
        let mut model = Self::from_specs(&checkpoint.layers, &mut rng)?;
        model.load_state(&checkpoint.arrays)?;
        Ok(model)
    }
}
