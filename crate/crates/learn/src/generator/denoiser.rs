//! Noise-prediction network with separate input, timestep and label branches.

use chronos_nn::gradcheck::Differentiable;
use chronos_nn::layers::{LayerSpec, Mode, Param};
use chronos_nn::{gemm, ModelCheckpoint, NamedArray, Sequential, Tensor};
use rand::rngs::StdRng;
use rand::{RngCore, SeedableRng};

use super::schedule::timestep_embedding;
use super::DiffusionConfig;
use crate::{Error, Result};

pub const DENOISER_MODEL_KIND: &str = "denoiser";

const BRANCHES: [&str; 4] = ["input", "time", "label", "trunk"];

/// `ε̂ = trunk([W_in·x + b_in, time(emb(l)), label(onehot(c))])`, where the
/// time and label branches are dense layers followed by SiLU and the trunk
/// is three dense layers with SiLU between them.
pub struct Denoiser {
    data_dim: usize,
    n_qubits: usize,
    hidden: usize,
    classes: usize,
    /// Embeddings of timesteps `0..=L`, row-major.
    embeddings: Vec<f64>,
    input: Sequential,
    time: Sequential,
    label: Sequential,
    trunk: Sequential,
}

fn branch_specs(data_dim: usize, hidden: usize, classes: usize) -> [Vec<LayerSpec>; 4] {
    let dense = |inputs, outputs| LayerSpec::Dense { inputs, outputs };
    [
        vec![dense(data_dim, hidden)],
        vec![dense(hidden, hidden), LayerSpec::Silu],
        vec![dense(classes, hidden), LayerSpec::Silu],
        vec![
            dense(3 * hidden, hidden),
            LayerSpec::Silu,
            dense(hidden, hidden),
            LayerSpec::Silu,
            dense(hidden, data_dim),
        ],
    ]
}

/// Side-by-side concatenation of row blocks.
fn hconcat(parts: &[&Tensor]) -> Tensor {
    let rows = parts[0].batch();
    let width: usize = parts.iter().map(|p| p.row_len()).sum();
    let mut data = Vec::with_capacity(rows * width);
    for r in 0..rows {
        for p in parts {
            data.extend_from_slice(p.row(r));
        }
    }
    Tensor::new(&[rows, width], data).expect("consistent block shapes")
}

fn column_block(t: &Tensor, start: usize, width: usize) -> Tensor {
    let mut data = Vec::with_capacity(t.batch() * width);
    for r in 0..t.batch() {
        data.extend_from_slice(&t.row(r)[start..start + width]);
    }
    Tensor::new(&[t.batch(), width], data).expect("block within the row")
}

impl Denoiser {
    pub fn new(cfg: &DiffusionConfig, rng: &mut dyn RngCore) -> Result<Self> {
        cfg.validate()?;
        let [a, b, c, d] = branch_specs(cfg.data_dim(), cfg.hidden, cfg.classes);
        let mut embeddings = vec![0.0; (cfg.timesteps + 1) * cfg.hidden];
        for (l, row) in embeddings.chunks_exact_mut(cfg.hidden).enumerate() {
            timestep_embedding(l as f64, cfg.hidden, row);
        }
        Ok(Self {
            data_dim: cfg.data_dim(),
            n_qubits: cfg.n_qubits,
            hidden: cfg.hidden,
            classes: cfg.classes,
            embeddings,
            input: Sequential::from_specs(&a, rng)?,
            time: Sequential::from_specs(&b, rng)?,
            label: Sequential::from_specs(&c, rng)?,
            trunk: Sequential::from_specs(&d, rng)?,
        })
    }

    pub fn data_dim(&self) -> usize {
        self.data_dim
    }

    /// Qubits per record row.
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    fn branches(&self) -> [&Sequential; 4] {
        [&self.input, &self.time, &self.label, &self.trunk]
    }

    fn branches_mut(&mut self) -> [&mut Sequential; 4] {
        [&mut self.input, &mut self.time, &mut self.label, &mut self.trunk]
    }

    pub fn param_count(&self) -> usize {
        self.branches().iter().map(|b| b.param_count()).sum()
    }

    /// Sinusoidal embeddings of each row's timestep, `(B, hidden)`.
    pub fn time_features(&self, timesteps: &[usize]) -> Tensor {
        let h = self.hidden;
        let mut data = vec![0.0; timesteps.len() * h];
        for (row, &l) in data.chunks_exact_mut(h).zip(timesteps) {
            match self.embeddings.get(l * h..(l + 1) * h) {
                Some(cached) => row.copy_from_slice(cached),
                None => timestep_embedding(l as f64, h, row),
            }
        }
        Tensor::new(&[timesteps.len(), h], data).expect("embedding shape")
    }

    pub fn label_features(&self, classes: &[usize]) -> Result<Tensor> {
        let mut data = vec![0.0; classes.len() * self.classes];
        for (row, &c) in data.chunks_exact_mut(self.classes).zip(classes) {
            if c >= self.classes {
                return Err(Error::InvalidArgument(format!("class {c} of {}", self.classes)));
            }
            row[c] = 1.0;
        }
        Ok(Tensor::new(&[classes.len(), self.classes], data)?)
    }

    fn check_batch(&self, x: &Tensor, timesteps: &[usize], classes: &[usize]) -> Result<()> {
        if x.shape().len() != 2 || x.row_len() != self.data_dim {
            return Err(Error::InvalidData(format!(
                "denoiser input {:?}, expected (B, {})",
                x.shape(),
                self.data_dim
            )));
        }
        if timesteps.len() != x.batch() || classes.len() != x.batch() {
            return Err(Error::InvalidArgument(
                "one timestep and one class are needed per row".into(),
            ));
        }
        Ok(())
    }

    /// Training-mode pass that caches activations for [`Denoiser::backward`].
    pub fn forward(&mut self, x: &Tensor, timesteps: &[usize], classes: &[usize]) -> Result<Tensor> {
        self.check_batch(x, timesteps, classes)?;
        // no layer here draws random numbers
        let mut rng = StdRng::seed_from_u64(0);
        let t = self.time_features(timesteps);
        let c = self.label_features(classes)?;
        let a = self.input.forward(x, Mode::Train, &mut rng)?;
        let b = self.time.forward(&t, Mode::Train, &mut rng)?;
        let c = self.label.forward(&c, Mode::Train, &mut rng)?;
        Ok(self.trunk.forward(&hconcat(&[&a, &b, &c]), Mode::Train, &mut rng)?)
    }

    /// Accumulates parameter gradients; returns the gradient for `x`.
    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let h = self.hidden;
        let g = self.trunk.backward(grad)?;
        self.time.backward(&column_block(&g, h, h))?;
        self.label.backward(&column_block(&g, 2 * h, h))?;
        Ok(self.input.backward(&column_block(&g, 0, h))?)
    }

    pub fn infer(&self, x: &Tensor, timesteps: &[usize], classes: &[usize]) -> Result<Tensor> {
        self.check_batch(x, timesteps, classes)?;
        let a = self.input.infer(x)?;
        let b = self.time.infer(&self.time_features(timesteps))?;
        let c = self.label.infer(&self.label_features(classes)?)?;
        Ok(self.trunk.infer(&hconcat(&[&a, &b, &c]))?)
    }

    pub fn zero_grad(&mut self) {
        for b in self.branches_mut() {
            b.zero_grad();
        }
    }

    pub fn named_params_mut(&mut self) -> Vec<(String, &mut Param)> {
        let mut out = Vec::new();
        for (name, b) in BRANCHES.iter().zip(self.branches_mut()) {
            for (p_name, p) in b.named_params_mut() {
                out.push((format!("{name}/{p_name}"), p));
            }
        }
        out
    }

    /// Weights without the metadata; see [`super::denoiser_checkpoint`].
    pub fn to_checkpoint(&self) -> ModelCheckpoint {
        let mut layers = Vec::new();
        let mut arrays = Vec::new();
        for (name, b) in BRANCHES.iter().zip(self.branches()) {
            layers.extend(b.specs());
            arrays.extend(b.state_arrays().into_iter().map(|mut a| {
                a.name = format!("{name}/{}", a.name);
                a
            }));
        }
        ModelCheckpoint {
            model_kind: DENOISER_MODEL_KIND.to_string(),
            layers,
            arrays,
            ..ModelCheckpoint::default()
        }
    }

    /// Rebuilds the network for `cfg` and loads the checkpoint's arrays.
    pub fn from_checkpoint(cfg: &DiffusionConfig, ckpt: &ModelCheckpoint) -> Result<Self> {
        let mut model = Self::new(cfg, &mut StdRng::seed_from_u64(0))?;
        let expected: Vec<LayerSpec> = branch_specs(model.data_dim, model.hidden, model.classes).concat();
        if ckpt.layers != expected {
            return Err(Error::InvalidData(
                "checkpoint layers do not match the denoiser settings".into(),
            ));
        }
        let mut used = 0;
        for (name, b) in BRANCHES.iter().zip(model.branches_mut()) {
            let prefix = format!("{name}/");
            let arrays: Vec<NamedArray> = ckpt
                .arrays
                .iter()
                .filter_map(|a| {
                    a.name.strip_prefix(&prefix).map(|rest| NamedArray {
                        name: rest.to_string(),
                        ..a.clone()
                    })
                })
                .collect();
            used += arrays.len();
            b.load_state(&arrays)?;
        }
        if used != ckpt.arrays.len() {
            return Err(Error::InvalidData(
                "checkpoint holds arrays the denoiser does not use".into(),
            ));
        }
        Ok(model)
    }

    /// Inference with the input projection folded into the first trunk
    /// layer and the timestep/label contributions tabulated per class.
    pub fn fused(&self, timesteps: usize) -> Result<FusedDenoiser> {
        let (d, h) = (self.data_dim, self.hidden);
        let w_in = param(&self.input, "0.dense.weight")?;
        let b_in = param(&self.input, "0.dense.bias")?;
        let w1 = param(&self.trunk, "0.dense.weight")?;
        let b1 = param(&self.trunk, "0.dense.bias")?;

        // A = W1[:, :h] · W_in
        let w1_x = column_block(w1, 0, h);
        let mut folded = vec![0.0; h * d];
        gemm(h, h, d, w1_x.data(), false, w_in.data(), false, &mut folded, false);

        // per-step constant: W1·[b_in, time(l), label(c)] + b1
        let steps: Vec<usize> = (1..=timesteps).collect();
        let time = self.time.infer(&self.time_features(&steps))?;
        let mut constants = Vec::with_capacity(self.classes);
        for c in 0..self.classes {
            let label = self.label.infer(&self.label_features(&[c])?)?;
            let mut rows = Vec::with_capacity(timesteps * 3 * h);
            for l in 0..timesteps {
                rows.extend_from_slice(b_in.data());
                rows.extend_from_slice(time.row(l));
                rows.extend_from_slice(label.row(0));
            }
            let mut out = vec![0.0; timesteps * h];
            gemm(timesteps, 3 * h, h, &rows, false, w1.data(), true, &mut out, false);
            for row in out.chunks_exact_mut(h) {
                row.iter_mut().zip(b1.data()).for_each(|(o, b)| *o += b);
            }
            constants.push(out);
        }
        Ok(FusedDenoiser {
            data_dim: d,
            hidden: h,
            timesteps,
            folded,
            constants,
            w2: param(&self.trunk, "2.dense.weight")?.data().to_vec(),
            b2: param(&self.trunk, "2.dense.bias")?.data().to_vec(),
            w3: param(&self.trunk, "4.dense.weight")?.data().to_vec(),
            b3: param(&self.trunk, "4.dense.bias")?.data().to_vec(),
        })
    }
}

fn param<'a>(model: &'a Sequential, name: &str) -> Result<&'a Tensor> {
    model
        .named_params()
        .into_iter()
        .find(|(n, _)| n == name)
        .map(|(_, p)| &p.value)
        .ok_or_else(|| Error::InvalidData(format!("denoiser lacks '{name}'")))
}

impl Differentiable for Denoiser {
    fn parameters(&mut self) -> Vec<(String, &mut Param)> {
        self.named_params_mut()
    }
}

/// Read-only evaluation form of a [`Denoiser`] for the sampling loop.
pub struct FusedDenoiser {
    data_dim: usize,
    hidden: usize,
    timesteps: usize,
    /// `(hidden, data_dim)`
    folded: Vec<f64>,
    /// Per class, `(timesteps, hidden)`.
    constants: Vec<Vec<f64>>,
    w2: Vec<f64>,
    b2: Vec<f64>,
    w3: Vec<f64>,
    b3: Vec<f64>,
}

/// Reusable buffers for [`FusedDenoiser::predict`].
#[derive(Default)]
pub struct Scratch {
    h1: Vec<f64>,
    h2: Vec<f64>,
}

fn silu_in_place(v: &mut [f64]) {
    v.iter_mut().for_each(|x| *x = chronos_nn::layers::silu(*x));
}

impl FusedDenoiser {
    pub fn data_dim(&self) -> usize {
        self.data_dim
    }

    /// Predicted noise for `rows` samples (row-major in `x`) at timestep `l`
    /// (1-based) and class `class`, written to `out`.
    pub fn predict(&self, x: &[f64], rows: usize, l: usize, class: usize, scratch: &mut Scratch, out: &mut [f64]) {
        let (d, h) = (self.data_dim, self.hidden);
        debug_assert!(l >= 1 && l <= self.timesteps);
        let constant = &self.constants[class][(l - 1) * h..l * h];
        scratch.h1.resize(rows * h, 0.0);
        scratch.h2.resize(rows * h, 0.0);
        for row in scratch.h1.chunks_exact_mut(h) {
            row.copy_from_slice(constant);
        }
        gemm(rows, d, h, x, false, &self.folded, true, &mut scratch.h1, true);
        silu_in_place(&mut scratch.h1);
        for row in scratch.h2.chunks_exact_mut(h) {
            row.copy_from_slice(&self.b2);
        }
        gemm(rows, h, h, &scratch.h1, false, &self.w2, true, &mut scratch.h2, true);
        silu_in_place(&mut scratch.h2);
        for row in out[..rows * d].chunks_exact_mut(d) {
            row.copy_from_slice(&self.b3);
        }
        gemm(
            rows,
            h,
            d,
            &scratch.h2,
            false,
            &self.w3,
            true,
            &mut out[..rows * d],
            true,
        );
    }
}
