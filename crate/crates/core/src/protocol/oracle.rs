use super::{Direction, ProtocolConfig};
use crate::qcore::unitary::step_in_place;
use crate::qcore::{dephase_z, gibbs_product_state, DensityMatrix, PureState, Storage};
use crate::{Error, Result};

/// Ensemble states `ρ^0 … ρ^n` of a measured run, in the order the process
/// visits them.
#[derive(Clone, Debug, PartialEq)]
pub struct StateTrajectory {
    pub states: Vec<DensityMatrix>,
    pub direction: Direction,
}

impl StateTrajectory {
    pub fn initial(&self) -> &DensityMatrix {
        &self.states[0]
    }

    pub fn last(&self) -> &DensityMatrix {
        self.states.last().expect("at least one state")
    }
}

/// `Σ_a P_a U ρ U† P_a` for one step. Diagonal inputs are propagated one basis
/// state at a time; dense inputs go through the full conjugation.
pub fn dephased_step(rho: &DensityMatrix, delta_t: f64, reverse: bool) -> Result<DensityMatrix> {
    match rho.storage() {
        Storage::Diagonal(p) => {
            let n = rho.n_qubits();
            let mut out = vec![0.0; p.len()];
            let mut psi = PureState::basis(n, 0)?;
            for (a, &pa) in p.iter().enumerate() {
                if pa == 0.0 {
                    continue;
                }
                psi.reset_basis(a);
                step_in_place(&mut psi, delta_t, reverse)?;
                for (o, amp) in out.iter_mut().zip(psi.amplitudes()) {
                    *o += pa * amp.norm_sqr();
                }
            }
            DensityMatrix::from_diagonal(n, out)
        }
        Storage::Full(_) => {
            let mut evolved = rho.clone();
            step_in_place(&mut evolved, delta_t, reverse)?;
            Ok(dephase_z(&evolved))
        }
    }
}

/// Noiseless ensemble oracle: alternate the step unitary (or its inverse) with
/// full dephasing, starting from a diagonal `initial`.
pub fn exact_state_trajectory(
    config: &ProtocolConfig,
    direction: Direction,
    initial: &DensityMatrix,
) -> Result<StateTrajectory> {
    if !initial.is_diagonal() {
        return Err(Error::InvalidState(
            "the ensemble oracle starts from a diagonal state".into(),
        ));
    }
    if initial.n_qubits() != config.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: config.n_qubits(),
            found: initial.n_qubits(),
        });
    }
    let mut states = Vec::with_capacity(config.n_steps() + 1);
    states.push(initial.clone());
    for _ in 0..config.n_steps() {
        let next = dephased_step(states.last().unwrap(), config.delta_t(), direction.is_reverse())?;
        states.push(next);
    }
    Ok(StateTrajectory { states, direction })
}

/// Basis-state populations of measurement-free evolution, one vector per step.
///
/// Forward starts from the Gibbs state and applies `U` each step. Reverse
/// starts from the forward final state `U^n ρ⁰ U^{-n}` and applies `U†` each
/// step; its vectors are in reverse-process order.
pub fn unitary_diagonals(config: &ProtocolConfig, direction: Direction) -> Result<Vec<Vec<f64>>> {
    let n = config.n_qubits();
    let steps = config.n_steps();
    let dt = config.delta_t();
    let gibbs = gibbs_product_state(config.gibbs()).probabilities();
    let mut out = vec![vec![0.0; gibbs.len()]; steps + 1];
    let mut psi = PureState::basis(n, 0)?;
    for (a, &pa) in gibbs.iter().enumerate() {
        if pa == 0.0 {
            continue;
        }
        psi.reset_basis(a);
        if direction.is_reverse() {
            for _ in 0..steps {
                step_in_place(&mut psi, dt, false)?;
            }
        }
        for (k, acc) in out.iter_mut().enumerate() {
            if k > 0 {
                step_in_place(&mut psi, dt, direction.is_reverse())?;
            }
            for (o, amp) in acc.iter_mut().zip(psi.amplitudes()) {
                *o += pa * amp.norm_sqr();
            }
        }
    }
    Ok(out)
}

/// Per-qubit `⟨Z_j⟩` from basis-state populations.
pub fn z_expectations(probabilities: &[f64], n_qubits: usize) -> Vec<f64> {
    let mut z = vec![0.0; n_qubits];
    for (a, &p) in probabilities.iter().enumerate() {
        for (j, zj) in z.iter_mut().enumerate() {
            if (a >> j) & 1 == 0 {
                *zj += p;
            } else {
                *zj -= p;
            }
        }
    }
    z
}
