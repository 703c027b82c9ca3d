use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::measured::raw_single_step_run;
use super::{check_count, exact_state_trajectory, Direction, Label, ProtocolConfig, RawStepRecord, TrajectoryRecord};
use crate::qcore::{gibbs_product_state, Bitstring};
use crate::rng::{self, tag};
use crate::{Error, Result};

/// How the first unit of every assembled trajectory is chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum StartPolicy {
    /// Any unused raw entry, uniformly.
    UniformFromRaw,
    /// Draw the starting basis state from these populations (length
    /// `2^n_qubits`), then take an unused raw entry that starts there.
    Distribution(Vec<f64>),
}

/// What happened during [`assemble_from_raw`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AssemblyReport {
    pub requested: usize,
    pub assembled: usize,
    pub raw_entries: usize,
    pub consumed: usize,
    /// Chains abandoned at each step because no unused entry started from
    /// the required state.
    pub dropped_per_step: Vec<usize>,
}

impl AssemblyReport {
    pub fn shortfall(&self) -> usize {
        self.requested - self.assembled
    }
}

/// Index of a draw from `probs` (which need not be normalised).
fn sample_index_from<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (a, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = a;
            if target < acc {
                return a;
            }
        }
    }
    last
}

/// Chain single-step runs into trajectories, layer by layer: pick starting
/// units, then for every surviving chain take an unused unit whose initial
/// state equals the chain's latest outcome. Every raw entry is used at most
/// once. Chains that cannot be extended are dropped and counted in the report.
///
/// Reverse-direction raw data yields backward records (rows time-reversed).
pub fn assemble_from_raw<R: Rng + ?Sized>(
    raw: &[RawStepRecord],
    target_count: usize,
    n_steps: usize,
    start: &StartPolicy,
    rng: &mut R,
) -> Result<(Vec<TrajectoryRecord>, AssemblyReport)> {
    if n_steps == 0 {
        return Err(Error::InvalidArgument("at least one step is required".into()));
    }
    let mut report = AssemblyReport {
        requested: target_count,
        raw_entries: raw.len(),
        dropped_per_step: vec![0; n_steps],
        ..Default::default()
    };
    let Some(first) = raw.first() else {
        return Ok((Vec::new(), report));
    };
    let (direction, n_qubits) = (first.direction, first.initial.len());
    for r in raw {
        if r.direction != direction {
            return Err(Error::InvalidArgument(
                "raw records mix forward and reverse runs".into(),
            ));
        }
        if r.initial.len() != n_qubits || r.outcome.len() != n_qubits {
            return Err(Error::DimensionMismatch {
                expected: n_qubits,
                found: r.initial.len().max(r.outcome.len()),
            });
        }
    }
    if let StartPolicy::Distribution(p) = start {
        if p.len() != 1 << n_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << n_qubits,
                found: p.len(),
            });
        }
        if p.iter().any(|x| !(*x >= 0.0)) || !(p.iter().sum::<f64>() > 0.0) {
            return Err(Error::InvalidArgument("invalid start distribution".into()));
        }
    }

    let mut pools: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, r) in raw.iter().enumerate() {
        pools.entry(r.initial.value()).or_default().push(i);
    }
    for pool in pools.values_mut() {
        pool.shuffle(rng);
    }
    let mut used = vec![false; raw.len()];
    let mut take = |state: u64, used: &mut Vec<bool>| -> Option<usize> {
        let pool = pools.get_mut(&state)?;
        while let Some(i) = pool.pop() {
            if !used[i] {
                used[i] = true;
                return Some(i);
            }
        }
        None
    };

    let mut chains: Vec<Vec<u64>> = Vec::with_capacity(target_count);
    match start {
        StartPolicy::UniformFromRaw => {
            let mut order: Vec<usize> = (0..raw.len()).collect();
            order.shuffle(rng);
            for &i in order.iter().take(target_count) {
                used[i] = true;
                chains.push(vec![raw[i].initial.value(), raw[i].outcome.value()]);
            }
            report.dropped_per_step[0] = target_count - chains.len();
        }
        StartPolicy::Distribution(p) => {
            for _ in 0..target_count {
                let s = sample_index_from(p, rng) as u64;
                match take(s, &mut used) {
                    Some(i) => chains.push(vec![s, raw[i].outcome.value()]),
                    None => report.dropped_per_step[0] += 1,
                }
            }
        }
    }
    for step in 1..n_steps {
        let mut survivors = Vec::with_capacity(chains.len());
        for mut chain in chains {
            let current = *chain.last().unwrap();
            match take(current, &mut used) {
                Some(i) => {
                    chain.push(raw[i].outcome.value());
                    survivors.push(chain);
                }
                None => report.dropped_per_step[step] += 1,
            }
        }
        chains = survivors;
    }

    report.assembled = chains.len();
    report.consumed = used.iter().filter(|u| **u).count();
    let records = chains
        .into_iter()
        .map(|chain| {
            let rows = chain
                .into_iter()
                .map(|v| Bitstring::new(n_qubits, v))
                .collect::<Result<Vec<_>>>()?;
            let rec = TrajectoryRecord::new(&rows, Label::Forward)?;
            Ok(match direction {
                Direction::Forward => rec,
                Direction::Reverse => rec.reversed(Label::Backward),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((records, report))
}

/// Cut labelled records into their single-step units. Backward records are
/// turned back into reverse-process order first.
pub fn shred_records(records: &[TrajectoryRecord]) -> Result<Vec<RawStepRecord>> {
    let mut out = Vec::new();
    for rec in records {
        let (rows, direction): (Vec<Bitstring>, _) = match rec.label() {
            Label::Forward => (rec.rows().collect(), Direction::Forward),
            Label::Backward => (rec.rows().rev().collect(), Direction::Reverse),
            Label::Unlabeled => return Err(Error::InvalidArgument("unlabelled records have no direction".into())),
        };
        out.extend(rows.windows(2).map(|w| RawStepRecord {
            initial: w[0],
            outcome: w[1],
            direction,
        }));
    }
    Ok(out)
}

/// Populations the first unit of an assembled trajectory starts from: the
/// Gibbs state for forward runs, the oracle's forward final state for reverse
/// runs.
pub fn start_distribution(config: &ProtocolConfig, direction: Direction) -> Result<Vec<f64>> {
    let gibbs = gibbs_product_state(config.gibbs());
    Ok(match direction {
        Direction::Forward => gibbs.probabilities(),
        Direction::Reverse => exact_state_trajectory(config, Direction::Forward, &gibbs)?
            .last()
            .probabilities(),
    })
}

/// `count` independent unit runs whose initial states are drawn from the
/// oracle ensemble averaged over steps `0..n_steps` of the given direction,
/// so that a layered assembly finds matching units at every step.
pub fn raw_dataset(config: &ProtocolConfig, direction: Direction, count: usize) -> Result<Vec<RawStepRecord>> {
    check_count(count)?;
    let start = DensityStart::new(config, direction)?;
    let n = config.n_qubits();
    let seed = config.master_seed();
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::task_stream(seed, tag::RAW_RUN, i, 0);
            let initial = Bitstring::new(n, sample_index_from(&start.mixture, &mut r) as u64)?;
            let mut r = rng::task_stream(seed, tag::RAW_RUN, i, 1);
            raw_single_step_run(config, &initial, direction, &mut r)
        })
        .collect()
}

struct DensityStart {
    mixture: Vec<f64>,
}

impl DensityStart {
    fn new(config: &ProtocolConfig, direction: Direction) -> Result<Self> {
        let first =
            crate::qcore::DensityMatrix::from_diagonal(config.n_qubits(), start_distribution(config, direction)?)?;
        let traj = exact_state_trajectory(config, direction, &first)?;
        let mut mixture = vec![0.0; first.dim()];
        for s in &traj.states[..config.n_steps()] {
            for (m, p) in mixture.iter_mut().zip(s.probabilities()) {
                *m += p / config.n_steps() as f64;
            }
        }
        Ok(Self { mixture })
    }
}
