use std::fmt;

use super::{check_index, check_qubits, C64, MAX_QUBITS};
use crate::{Error, Result};

/// A computational basis string. Bit `k` of `value` is qubit `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bitstring {
    len: u8,
    value: u64,
}

impl Bitstring {
    pub fn new(len: usize, value: u64) -> Result<Self> {
        if len == 0 || len > 64 {
            return Err(Error::InvalidArgument(format!("bitstring length {len}")));
        }
        if len < 64 && value >> len != 0 {
            return Err(Error::InvalidArgument(format!(
                "value {value} does not fit in {len} bits"
            )));
        }
        Ok(Self { len: len as u8, value })
    }

    pub fn zeros(len: usize) -> Result<Self> {
        Self::new(len, 0)
    }

    /// Build from one `0`/`1` byte per qubit, qubit 0 first.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let mut value = 0u64;
        for (k, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => value |= 1 << k,
                other => return Err(Error::InvalidArgument(format!("bit value {other} at {k}"))),
            }
        }
        Self::new(bits.len(), value)
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn index(&self) -> usize {
        self.value as usize
    }

    pub fn bit(&self, qubit: usize) -> u8 {
        ((self.value >> qubit) & 1) as u8
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len()).map(|k| self.bit(k)).collect()
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in 0..self.len() {
            f.write_str(if self.bit(k) == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// State vector of `n_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    n_qubits: usize,
    amplitudes: Vec<C64>,
}

const NORM_TOL: f64 = 1e-12;

impl PureState {
    /// Normalised state; rejects vectors whose norm is not 1 within 1e-12.
    pub fn new(n_qubits: usize, amplitudes: Vec<C64>) -> Result<Self> {
        let state = Self::from_amplitudes(n_qubits, amplitudes)?;
        let norm = state.norm_sqr().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("state norm {norm}")));
        }
        Ok(state)
    }

    /// Rescale `amplitudes` to unit norm.
    pub fn normalized(n_qubits: usize, mut amplitudes: Vec<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState(format!("cannot normalise, norm {norm}")));
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Self::from_amplitudes(n_qubits, amplitudes)
    }

    /// Length-checked but not norm-checked.
    pub fn from_amplitudes(n_qubits: usize, amplitudes: Vec<C64>) -> Result<Self> {
        check_qubits(n_qubits, MAX_QUBITS)?;
        if amplitudes.len() != 1 << n_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << n_qubits,
                found: amplitudes.len(),
            });
        }
        Ok(Self { n_qubits, amplitudes })
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_qubits(n_qubits, MAX_QUBITS)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} for dimension {dim}"
            )));
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
        amplitudes[index] = C64::new(1.0, 0.0);
        Ok(Self { n_qubits, amplitudes })
    }

    pub fn from_bitstring(bits: &Bitstring) -> Result<Self> {
        Self::basis(bits.len(), bits.index())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    /// Overwrite with basis state `index` without reallocating.
    pub(crate) fn reset_basis(&mut self, index: usize) {
        self.amplitudes.fill(C64::new(0.0, 0.0));
        self.amplitudes[index] = C64::new(1.0, 0.0);
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `⟨Z_q⟩` for a single qubit.
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        check_index(qubit, self.n_qubits)?;
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(a, amp)| {
                let sign = if (a >> qubit) & 1 == 0 { 1.0 } else { -1.0 };
                sign * amp.norm_sqr()
            })
            .sum())
    }

    /// `|⟨self|other⟩|²`, insensitive to global phase.
    pub fn overlap_sqr(&self, other: &PureState) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let inner: C64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(inner.norm_sqr())
    }
}
