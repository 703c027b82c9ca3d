//! Exact quantum states and the operators of the exchange protocol.

mod density;
mod gibbs;
mod info;
pub(crate) mod measure;
mod state;
pub(crate) mod unitary;

pub use density::{DensityMatrix, Storage};
pub use gibbs::{gibbs_product_state, sample_gibbs_bitstring, GibbsSpec, BETA_CLAMP};
pub use info::{
    dephase_z, hermitian_eigenvalues, mutual_information, partial_trace, state_fidelity, subsystem_energy,
    von_neumann_entropy,
};
pub use measure::measure_all_z;
pub use state::{Bitstring, PureState};
pub use unitary::{apply_pair_unitary, apply_step_unitary, build_pair_unitary, PairUnitary, QuantumState};

pub type C64 = num_complex::Complex64;

/// Largest register a [`PureState`] may hold.
pub const MAX_QUBITS: usize = 20;
/// Largest register a dense (`Storage::Full`) density matrix may hold.
pub const MAX_DENSE_QUBITS: usize = 11;

use crate::{Error, Result};

pub(crate) fn check_qubits(n_qubits: usize, max: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > max {
        return Err(Error::InvalidArgument(format!(
            "register size {n_qubits} outside 1..={max}"
        )));
    }
    Ok(())
}

pub(crate) fn check_index(index: usize, n_qubits: usize) -> Result<()> {
    if index >= n_qubits {
        return Err(Error::IndexOutOfRange { index, n_qubits });
    }
    Ok(())
}

/// Spread the bits of `x` so that bit positions `lo < hi` are zero.
#[inline]
pub(crate) fn insert_zero_bits(x: usize, lo: usize, hi: usize) -> usize {
    let low_mask = (1usize << lo) - 1;
    let y = (x & low_mask) | ((x & !low_mask) << 1);
    let mid_mask = (1usize << hi) - 1;
    (y & mid_mask) | ((y & !mid_mask) << 1)
}

#[cfg(test)]
mod tests {
    use super::insert_zero_bits;

    #[test]
    fn insert_zero_bits_enumerates_group_bases() {
        let mut bases: Vec<usize> = (0..4).map(|x| insert_zero_bits(x, 0, 2)).collect();
        bases.sort();
        assert_eq!(bases, vec![0b0000, 0b0010, 0b1000, 0b1010]);
        for x in 0..64 {
            let b = insert_zero_bits(x, 1, 4);
            assert_eq!(b & 0b10010, 0);
        }
    }
}
