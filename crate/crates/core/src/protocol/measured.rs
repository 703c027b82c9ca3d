use rand::Rng;
use rayon::prelude::*;

use super::{check_count, Direction, Label, ProtocolConfig, RawStepRecord, TrajectoryRecord};
use crate::qcore::measure::sample_index;
use crate::qcore::unitary::step_in_place;
use crate::qcore::{sample_gibbs_bitstring, Bitstring, PureState};
use crate::rng::{self, tag};
use crate::{Error, Result};

/// Reusable state buffer for "prepare basis state, evolve one step, measure".
struct UnitRunner {
    n_qubits: usize,
    delta_t: f64,
    reverse: bool,
    state: PureState,
}

impl UnitRunner {
    fn new(n_qubits: usize, delta_t: f64, direction: Direction) -> Result<Self> {
        Ok(Self {
            n_qubits,
            delta_t,
            reverse: direction.is_reverse(),
            state: PureState::basis(n_qubits, 0)?,
        })
    }

    fn run<R: Rng + ?Sized>(&mut self, from: u64, rng: &mut R) -> Result<u64> {
        self.state.reset_basis(from as usize);
        step_in_place(&mut self.state, self.delta_t, self.reverse)?;
        Ok(sample_index(&self.state, rng)? as u64)
    }

    /// `start` followed by `n_steps` measured outcomes; step `k` draws from
    /// stream `(seed, tag, index, k)`.
    fn chain(&mut self, start: u64, n_steps: usize, seed: u64, tag: u8, index: u64) -> Result<Vec<Bitstring>> {
        let mut rows = Vec::with_capacity(n_steps + 1);
        rows.push(Bitstring::new(self.n_qubits, start)?);
        let mut current = start;
        for k in 1..=n_steps {
            let mut r = rng::task_stream(seed, tag, index, k as u64);
            current = self.run(current, &mut r)?;
            rows.push(Bitstring::new(self.n_qubits, current)?);
        }
        Ok(rows)
    }
}

/// Measured forward trajectories. Record `t` depends only on
/// `(master_seed, t)`.
pub fn simulate_forward(config: &ProtocolConfig, count: usize) -> Result<Vec<TrajectoryRecord>> {
    check_count(count)?;
    let seed = config.master_seed();
    (0..count as u64)
        .into_par_iter()
        .map_init(
            || UnitRunner::new(config.n_qubits(), config.delta_t(), Direction::Forward),
            |runner, t| {
                let runner = runner.as_mut().map_err(|e| e.clone())?;
                let mut r = rng::task_stream(seed, tag::FORWARD, t, 0);
                let start = sample_gibbs_bitstring(config.gibbs(), &mut r).value();
                let rows = runner.chain(start, config.n_steps(), seed, tag::FORWARD, t)?;
                TrajectoryRecord::new(&rows, Label::Forward)
            },
        )
        .collect()
}

/// Last row of every record.
pub fn final_states(records: &[TrajectoryRecord]) -> Vec<Bitstring> {
    records.iter().map(|r| r.row(r.n_steps())).collect()
}

/// Measured reverse-process runs seeded from `forward_finals` (drawn uniformly
/// with replacement), stored time-reversed: row 0 is the last reverse outcome
/// and row `n_steps` the seeding state.
pub fn simulate_backward(
    config: &ProtocolConfig,
    forward_finals: &[Bitstring],
    count: usize,
) -> Result<Vec<TrajectoryRecord>> {
    check_count(count)?;
    if forward_finals.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if let Some(b) = forward_finals.iter().find(|b| b.len() != config.n_qubits()) {
        return Err(Error::DimensionMismatch {
            expected: config.n_qubits(),
            found: b.len(),
        });
    }
    let seed = config.master_seed();
    (0..count as u64)
        .into_par_iter()
        .map_init(
            || UnitRunner::new(config.n_qubits(), config.delta_t(), Direction::Reverse),
            |runner, t| {
                let runner = runner.as_mut().map_err(|e| e.clone())?;
                let mut r = rng::task_stream(seed, tag::BACKWARD, t, 0);
                let start = forward_finals[r.random_range(0..forward_finals.len())].value();
                let mut rows = runner.chain(start, config.n_steps(), seed, tag::BACKWARD, t)?;
                rows.reverse();
                TrajectoryRecord::new(&rows, Label::Backward)
            },
        )
        .collect()
}

/// One unit run from `initial`.
pub fn raw_single_step_run<R: Rng + ?Sized>(
    config: &ProtocolConfig,
    initial: &Bitstring,
    direction: Direction,
    rng: &mut R,
) -> Result<RawStepRecord> {
    if initial.len() != config.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: config.n_qubits(),
            found: initial.len(),
        });
    }
    let mut runner = UnitRunner::new(config.n_qubits(), config.delta_t(), direction)?;
    let outcome = runner.run(initial.value(), rng)?;
    Ok(RawStepRecord {
        initial: *initial,
        outcome: Bitstring::new(config.n_qubits(), outcome)?,
        direction,
    })
}
