use nalgebra::DMatrix;

use super::{check_qubits, hermitian_eigenvalues, PureState, C64, MAX_DENSE_QUBITS, MAX_QUBITS};
use crate::{Error, Result};

/// How a [`DensityMatrix`] keeps its entries.
#[derive(Clone, Debug, PartialEq)]
pub enum Storage {
    /// Dense Hermitian matrix.
    Full(DMatrix<C64>),
    /// Diagonal in the computational basis: one probability per basis state.
    Diagonal(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    storage: Storage,
}

const DIAG_SUM_TOL: f64 = 1e-12;
const FULL_TOL: f64 = 1e-10;
/// Eigenvalue positivity is only checked on construction up to this size.
const EIGEN_CHECK_MAX_QUBITS: usize = 8;

impl DensityMatrix {
    pub fn from_diagonal(n_qubits: usize, probabilities: Vec<f64>) -> Result<Self> {
        check_qubits(n_qubits, MAX_QUBITS)?;
        if probabilities.len() != 1 << n_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << n_qubits,
                found: probabilities.len(),
            });
        }
        if let Some(p) = probabilities.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidState(format!("negative or non-finite probability {p}")));
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > DIAG_SUM_TOL {
            return Err(Error::InvalidState(format!("probabilities sum to {sum}")));
        }
        Ok(Self {
            n_qubits,
            storage: Storage::Diagonal(probabilities),
        })
    }

    /// Dense density matrix; checks trace, hermiticity and (for small
    /// registers) positivity.
    pub fn from_matrix(n_qubits: usize, matrix: DMatrix<C64>) -> Result<Self> {
        check_qubits(n_qubits, MAX_DENSE_QUBITS)?;
        let dim = 1 << n_qubits;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > FULL_TOL || trace.im.abs() > FULL_TOL {
            return Err(Error::InvalidState(format!("trace {trace}")));
        }
        for r in 0..dim {
            for c in 0..=r {
                if (matrix[(r, c)] - matrix[(c, r)].conj()).norm() > FULL_TOL {
                    return Err(Error::InvalidState(format!("not Hermitian at ({r}, {c})")));
                }
            }
        }
        if n_qubits <= EIGEN_CHECK_MAX_QUBITS {
            let min = hermitian_eigenvalues(&matrix).into_iter().fold(f64::INFINITY, f64::min);
            if min < -FULL_TOL {
                return Err(Error::InvalidState(format!("negative eigenvalue {min}")));
            }
        }
        Ok(Self {
            n_qubits,
            storage: Storage::Full(matrix),
        })
    }

    pub(crate) fn from_matrix_unchecked(n_qubits: usize, matrix: DMatrix<C64>) -> Self {
        Self {
            n_qubits,
            storage: Storage::Full(matrix),
        }
    }

    pub(crate) fn from_diagonal_unchecked(n_qubits: usize, probabilities: Vec<f64>) -> Self {
        Self {
            n_qubits,
            storage: Storage::Diagonal(probabilities),
        }
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn from_pure(state: &PureState) -> Result<Self> {
        check_qubits(state.n_qubits(), MAX_DENSE_QUBITS)?;
        let dim = state.dim();
        let amps = state.amplitudes();
        let matrix = DMatrix::from_fn(dim, dim, |r, c| amps[r] * amps[c].conj());
        Ok(Self::from_matrix_unchecked(state.n_qubits(), matrix))
    }

    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits, MAX_QUBITS)?;
        let dim = 1usize << n_qubits;
        Ok(Self::from_diagonal_unchecked(n_qubits, vec![1.0 / dim as f64; dim]))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub(crate) fn storage_mut(&mut self) -> &mut Storage {
        &mut self.storage
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.storage, Storage::Diagonal(_))
    }

    /// Diagonal entries (basis-state populations), whatever the storage.
    pub fn probabilities(&self) -> Vec<f64> {
        match &self.storage {
            Storage::Diagonal(p) => p.clone(),
            Storage::Full(m) => (0..m.nrows()).map(|a| m[(a, a)].re).collect(),
        }
    }

    /// Dense copy of the matrix.
    pub fn to_matrix(&self) -> DMatrix<C64> {
        match &self.storage {
            Storage::Full(m) => m.clone(),
            Storage::Diagonal(p) => {
                let mut m = DMatrix::zeros(p.len(), p.len());
                for (a, &pa) in p.iter().enumerate() {
                    m[(a, a)] = C64::new(pa, 0.0);
                }
                m
            }
        }
    }

    /// Largest off-diagonal magnitude (0 for diagonal storage).
    pub fn max_off_diagonal(&self) -> f64 {
        match &self.storage {
            Storage::Diagonal(_) => 0.0,
            Storage::Full(m) => {
                let mut max = 0.0f64;
                for c in 0..m.ncols() {
                    for r in 0..m.nrows() {
                        if r != c {
                            max = max.max(m[(r, c)].norm());
                        }
                    }
                }
                max
            }
        }
    }

    /// Max entrywise distance to `other`.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        if let (Storage::Diagonal(p), Storage::Diagonal(q)) = (&self.storage, &other.storage) {
            return Ok(p.iter().zip(q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
        let (a, b) = (self.to_matrix(), other.to_matrix());
        Ok(a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max))
    }

    pub fn trace(&self) -> f64 {
        self.probabilities().iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_validation() {
        assert!(DensityMatrix::from_diagonal(1, vec![0.5, 0.5]).is_ok());
        assert!(DensityMatrix::from_diagonal(1, vec![0.6, 0.5]).is_err());
        assert!(DensityMatrix::from_diagonal(1, vec![1.1, -0.1]).is_err());
        assert!(DensityMatrix::from_diagonal(2, vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn full_validation() {
        let mut m = DMatrix::<C64>::zeros(2, 2);
        m[(0, 0)] = C64::new(0.5, 0.0);
        m[(1, 1)] = C64::new(0.5, 0.0);
        m[(0, 1)] = C64::new(0.0, 0.5);
        m[(1, 0)] = C64::new(0.0, -0.5);
        assert!(DensityMatrix::from_matrix(1, m.clone()).is_ok());
        m[(1, 0)] = C64::new(0.0, 0.5);
        assert!(DensityMatrix::from_matrix(1, m.clone()).is_err());
        // Hermitian, unit trace, but eigenvalues 1.5 and -0.5
        let mut bad = DMatrix::<C64>::zeros(2, 2);
        bad[(0, 0)] = C64::new(0.5, 0.0);
        bad[(1, 1)] = C64::new(0.5, 0.0);
        bad[(0, 1)] = C64::new(1.0, 0.0);
        bad[(1, 0)] = C64::new(1.0, 0.0);
        assert!(matches!(
            DensityMatrix::from_matrix(1, bad),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn pure_projector_has_unit_trace() {
        let s = PureState::normalized(2, vec![C64::new(1.0, 0.0); 4]).unwrap();
        let rho = DensityMatrix::from_pure(&s).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-15);
        assert!(rho.max_off_diagonal() > 0.2);
    }
}
