use rand::Rng;
use rayon::prelude::*;

use super::{check_count, unitary_diagonals, z_expectations, Direction, Label, ProtocolConfig, TrajectoryRecord};
use crate::qcore::Bitstring;
use crate::rng::{self, tag};
use crate::Result;

/// Measurement-free records. The ensemble evolves without collapse; after
/// each step every qubit's bit is drawn independently with
/// `p(1) = (1 − ⟨Z_j⟩)/2`.
///
/// [`Direction::Reverse`] runs the inverse evolution from the forward final
/// state and stores the rows time-reversed, labelled backward, mirroring the
/// measured backward records.
pub fn simulate_unitary_only(
    config: &ProtocolConfig,
    count: usize,
    direction: Direction,
) -> Result<Vec<TrajectoryRecord>> {
    check_count(count)?;
    let n = config.n_qubits();
    let p_one: Vec<Vec<f64>> = unitary_diagonals(config, direction)?
        .iter()
        .map(|d| {
            z_expectations(d, n)
                .into_iter()
                .map(|z| ((1.0 - z) / 2.0).clamp(0.0, 1.0))
                .collect()
        })
        .collect();
    let (stream_tag, label) = match direction {
        Direction::Forward => (tag::UNITARY_FORWARD, Label::Forward),
        Direction::Reverse => (tag::UNITARY_REVERSE, Label::Backward),
    };
    let seed = config.master_seed();
    (0..count as u64)
        .into_par_iter()
        .map(|t| {
            let mut rows = p_one
                .iter()
                .enumerate()
                .map(|(k, probs)| {
                    let mut r = rng::task_stream(seed, stream_tag, t, k as u64);
                    let mut value = 0u64;
                    for (j, &p) in probs.iter().enumerate() {
                        if r.random::<f64>() < p {
                            value |= 1 << j;
                        }
                    }
                    Bitstring::new(n, value)
                })
                .collect::<Result<Vec<_>>>()?;
            if direction.is_reverse() {
                rows.reverse();
            }
            TrajectoryRecord::new(&rows, label)
        })
        .collect()
}
