//! Simulation core for measurement-induced irreversibility in a central-spin
//! thermodynamic protocol.
//!
//! * [`qcore`] holds exact state representations (state vectors, dense and
//!   diagonal density matrices) and the operators of the protocol.
//! * [`protocol`] generates forward, backward and measurement-free trajectory
//!   datasets and provides the exact ensemble oracle.
//! * [`thermo`] turns trajectory datasets into energy, heat, entropy and
//!   fidelity series.
//!
//! Qubit 0 is always the central spin (subsystem A); qubits `1..=n_bath` are
//! the bath, in interaction order. In a basis index, bit `k` is qubit `k`.

pub mod error;
pub mod protocol;
pub mod qcore;
pub mod rng;
pub mod thermo;

pub use error::{Error, Result};
