use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_qubits, Bitstring, DensityMatrix, MAX_QUBITS};
use crate::{Error, Result};

/// Inverse temperatures are clamped to `[-BETA_CLAMP, BETA_CLAMP]`;
/// `e^{-100}` is already below double-precision resolution next to 1.
pub const BETA_CLAMP: f64 = 50.0;

/// Per-qubit inverse temperatures for `H = Σ_j Z_j` (ħ = 1). Negative values
/// encode population inversion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct GibbsSpec {
    beta: Vec<f64>,
}

impl GibbsSpec {
    /// Rejects non-finite entries; finite magnitudes above [`BETA_CLAMP`] are
    /// clamped.
    pub fn new(beta: Vec<f64>) -> Result<Self> {
        if let Some(b) = beta.iter().find(|b| !b.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite inverse temperature {b}")));
        }
        Self::clamped(beta)
    }

    /// Like [`GibbsSpec::new`] but maps `±∞` to `±BETA_CLAMP` (zero-temperature
    /// limits). NaN is still rejected.
    pub fn clamped(beta: Vec<f64>) -> Result<Self> {
        check_qubits(beta.len(), MAX_QUBITS)?;
        if beta.iter().any(|b| b.is_nan()) {
            return Err(Error::InvalidArgument("NaN inverse temperature".into()));
        }
        Ok(Self {
            beta: beta.into_iter().map(|b| b.clamp(-BETA_CLAMP, BETA_CLAMP)).collect(),
        })
    }

    /// Central qubit at `beta_central`, `n_bath` bath qubits at `beta_bath`.
    pub fn central_and_bath(beta_central: f64, beta_bath: f64, n_bath: usize) -> Result<Self> {
        let mut beta = vec![beta_central];
        beta.extend(std::iter::repeat_n(beta_bath, n_bath));
        Self::new(beta)
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn n_qubits(&self) -> usize {
        self.beta.len()
    }

    /// Probability of `|0⟩` for qubit `j`: `e^{-β}/(2 cosh β)`.
    pub fn p_zero(&self, j: usize) -> f64 {
        1.0 / (1.0 + (2.0 * self.beta[j]).exp())
    }

    /// Probability of `|1⟩` for qubit `j`: `e^{β}/(2 cosh β)`.
    pub fn p_one(&self, j: usize) -> f64 {
        1.0 / (1.0 + (-2.0 * self.beta[j]).exp())
    }
}

impl TryFrom<Vec<f64>> for GibbsSpec {
    type Error = Error;

    fn try_from(beta: Vec<f64>) -> Result<Self> {
        Self::new(beta)
    }
}

impl From<GibbsSpec> for Vec<f64> {
    fn from(spec: GibbsSpec) -> Self {
        spec.beta
    }
}

/// `⊗_j e^{-β_j Z_j} / Z_j`, stored diagonally.
pub fn gibbs_product_state(spec: &GibbsSpec) -> DensityMatrix {
    let n = spec.n_qubits();
    let mut probs = vec![1.0f64; 1 << n];
    for j in 0..n {
        let (p0, p1) = (spec.p_zero(j), spec.p_one(j));
        for (a, p) in probs.iter_mut().enumerate() {
            *p *= if (a >> j) & 1 == 0 { p0 } else { p1 };
        }
    }
    DensityMatrix::from_diagonal_unchecked(n, probs)
}

/// Draw one basis state from the Gibbs product distribution; bit `j` is 1
/// with probability `e^{β_j}/(2 cosh β_j)`, independently.
pub fn sample_gibbs_bitstring<R: Rng + ?Sized>(spec: &GibbsSpec, rng: &mut R) -> Bitstring {
    let mut value = 0u64;
    for j in 0..spec.n_qubits() {
        if rng.random::<f64>() < spec.p_one(j) {
            value |= 1 << j;
        }
    }
    Bitstring::new(spec.n_qubits(), value).expect("register size validated by GibbsSpec")
}
