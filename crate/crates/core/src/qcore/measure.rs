use rand::Rng;

use super::{Bitstring, PureState};
use crate::{Error, Result};

/// Projective measurement of every qubit in the Z basis. Samples basis index
/// `a` with probability `|ψ_a|² / ‖ψ‖²` and returns the outcome with the
/// collapsed basis state.
pub fn measure_all_z<R: Rng + ?Sized>(state: &PureState, rng: &mut R) -> Result<(Bitstring, PureState)> {
    let index = sample_index(state, rng)?;
    let outcome = Bitstring::new(state.n_qubits(), index as u64)?;
    Ok((outcome, PureState::basis(state.n_qubits(), index)?))
}

pub(crate) fn sample_index<R: Rng + ?Sized>(state: &PureState, rng: &mut R) -> Result<usize> {
    let total = state.norm_sqr();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::InvalidState(format!(
            "cannot measure a state with squared norm {total}"
        )));
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (a, amp) in state.amplitudes().iter().enumerate() {
        let p = amp.norm_sqr();
        if p > 0.0 {
            acc += p;
            last_nonzero = a;
            if target < acc {
                return Ok(a);
            }
        }
    }
    // round-off left `acc` a hair below `total`
    Ok(last_nonzero)
}
