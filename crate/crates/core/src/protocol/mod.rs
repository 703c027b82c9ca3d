//! Trajectory generation for the repeated exchange-and-measure protocol.
//!
//! A forward trajectory starts from a basis state drawn from the Gibbs product
//! state and then, for each of `n_steps` steps, applies the step unitary and
//! measures every qubit in the Z basis. A backward trajectory runs the same
//! loop under the inverse unitary, starting from forward final states, and is
//! stored in reversed row order so that forward and backward records line up
//! step by step.

mod assembly;
mod measured;
mod oracle;
mod source;
mod unitary_only;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::qcore::{Bitstring, GibbsSpec, MAX_QUBITS};
use crate::{Error, Result};

pub use assembly::{assemble_from_raw, raw_dataset, shred_records, start_distribution, AssemblyReport, StartPolicy};
pub use measured::{final_states, raw_single_step_run, simulate_backward, simulate_forward};
pub use oracle::{dephased_step, exact_state_trajectory, unitary_diagonals, z_expectations, StateTrajectory};
pub use source::{SourceRegistry, TrajectorySource};
pub use unitary_only::simulate_unitary_only;

/// Step angle used when none is configured.
pub const DEFAULT_DELTA_T: f64 = 0.15;

/// Evolution direction of a protocol run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Reverse,
}

impl Direction {
    pub fn is_reverse(self) -> bool {
        self == Direction::Reverse
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Reverse => "reverse",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(Direction::Forward),
            "reverse" => Ok(Direction::Reverse),
            other => Err(Error::InvalidArgument(format!("unknown direction {other:?}"))),
        }
    }
}

/// Class of a trajectory record.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "forward")]
    Forward,
    #[serde(rename = "backward")]
    Backward,
    #[serde(rename = "none")]
    Unlabeled,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Forward => "forward",
            Label::Backward => "backward",
            Label::Unlabeled => "none",
        }
    }

    /// Binary target used by the classifiers: forward is 1, backward 0.
    pub fn target(self) -> Option<f64> {
        match self {
            Label::Forward => Some(1.0),
            Label::Backward => Some(0.0),
            Label::Unlabeled => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(Label::Forward),
            "backward" => Ok(Label::Backward),
            "none" => Ok(Label::Unlabeled),
            other => Err(Error::InvalidArgument(format!("unknown label {other:?}"))),
        }
    }
}

/// Parameters of the protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProtocolConfigFields", into = "ProtocolConfigFields")]
pub struct ProtocolConfig {
    n_bath: usize,
    n_steps: usize,
    delta_t: f64,
    gibbs: GibbsSpec,
    master_seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ProtocolConfigFields {
    n_bath: usize,
    n_steps: usize,
    delta_t: f64,
    beta: Vec<f64>,
    master_seed: u64,
}

impl Default for ProtocolConfigFields {
    fn default() -> Self {
        ProtocolConfig::default().into()
    }
}

impl TryFrom<ProtocolConfigFields> for ProtocolConfig {
    type Error = Error;

    fn try_from(f: ProtocolConfigFields) -> Result<Self> {
        ProtocolConfig::new(f.n_bath, f.n_steps, f.delta_t, GibbsSpec::new(f.beta)?, f.master_seed)
    }
}

impl From<ProtocolConfig> for ProtocolConfigFields {
    fn from(c: ProtocolConfig) -> Self {
        Self {
            n_bath: c.n_bath,
            n_steps: c.n_steps,
            delta_t: c.delta_t,
            beta: c.gibbs.into(),
            master_seed: c.master_seed,
        }
    }
}

impl Default for ProtocolConfig {
    /// Nine bath qubits, four steps, central spin at β = 1 and an inverted
    /// bath at β = −1.
    fn default() -> Self {
        Self {
            n_bath: 9,
            n_steps: 4,
            delta_t: DEFAULT_DELTA_T,
            gibbs: GibbsSpec::central_and_bath(1.0, -1.0, 9).expect("finite defaults"),
            master_seed: 0,
        }
    }
}

impl ProtocolConfig {
    pub fn new(n_bath: usize, n_steps: usize, delta_t: f64, gibbs: GibbsSpec, master_seed: u64) -> Result<Self> {
        if n_bath == 0 {
            return Err(Error::InvalidArgument("at least one bath qubit is required".into()));
        }
        if n_bath + 1 > MAX_QUBITS {
            return Err(Error::InvalidArgument(format!(
                "{} qubits exceed the limit of {MAX_QUBITS}",
                n_bath + 1
            )));
        }
        if n_steps == 0 {
            return Err(Error::InvalidArgument("at least one step is required".into()));
        }
        if !delta_t.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite Δt {delta_t}")));
        }
        if gibbs.n_qubits() != n_bath + 1 {
            return Err(Error::DimensionMismatch {
                expected: n_bath + 1,
                found: gibbs.n_qubits(),
            });
        }
        Ok(Self {
            n_bath,
            n_steps,
            delta_t,
            gibbs,
            master_seed,
        })
    }

    /// Default temperatures (β = +1 central, −1 bath) for the given sizes.
    pub fn with_sizes(n_bath: usize, n_steps: usize, delta_t: f64, master_seed: u64) -> Result<Self> {
        Self::new(
            n_bath,
            n_steps,
            delta_t,
            GibbsSpec::central_and_bath(1.0, -1.0, n_bath)?,
            master_seed,
        )
    }

    pub fn n_bath(&self) -> usize {
        self.n_bath
    }

    pub fn n_qubits(&self) -> usize {
        self.n_bath + 1
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn delta_t(&self) -> f64 {
        self.delta_t
    }

    pub fn gibbs(&self) -> &GibbsSpec {
        &self.gibbs
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn with_seed(mut self, master_seed: u64) -> Self {
        self.master_seed = master_seed;
        self
    }

    pub fn with_delta_t(mut self, delta_t: f64) -> Result<Self> {
        if !delta_t.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite Δt {delta_t}")));
        }
        self.delta_t = delta_t;
        Ok(self)
    }
}

/// One measured trajectory: `n_steps + 1` rows of `n_qubits` bits. Row 0 is
/// the initial basis state; column 0 is the central qubit.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TrajectoryRecord {
    n_qubits: usize,
    rows: Vec<u64>,
    label: Label,
}

impl TrajectoryRecord {
    pub fn new(rows: &[Bitstring], label: Label) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::InvalidArgument("a record needs at least one row".into()))?;
        let n_qubits = first.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n_qubits) {
            return Err(Error::DimensionMismatch {
                expected: n_qubits,
                found: bad.len(),
            });
        }
        Ok(Self {
            n_qubits,
            rows: rows.iter().map(Bitstring::value).collect(),
            label,
        })
    }

    /// From step-major bits: `bits[step * n_qubits + qubit]`.
    pub fn from_flat(n_qubits: usize, bits: &[u8], label: Label) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::InvalidArgument(format!("invalid register size {n_qubits}")));
        }
        if bits.is_empty() || bits.len() % n_qubits != 0 {
            return Err(Error::DimensionMismatch {
                expected: n_qubits * (bits.len() / n_qubits).max(1),
                found: bits.len(),
            });
        }
        let rows = bits
            .chunks(n_qubits)
            .map(|row| Bitstring::from_bits(row).map(|b| b.value()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n_qubits, rows, label })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Number of rows minus one.
    pub fn n_steps(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = label;
        self
    }

    pub fn row(&self, step: usize) -> Bitstring {
        Bitstring::new(self.n_qubits, self.rows[step]).expect("row width fixed at construction")
    }

    /// Row `step` as a basis index.
    pub fn row_index(&self, step: usize) -> usize {
        self.rows[step] as usize
    }

    pub fn rows(&self) -> impl DoubleEndedIterator<Item = Bitstring> + ExactSizeIterator + '_ {
        (0..self.rows.len()).map(|k| self.row(k))
    }

    pub fn bit(&self, step: usize, qubit: usize) -> u8 {
        ((self.rows[step] >> qubit) & 1) as u8
    }

    /// Step-major bits, `n_rows * n_qubits` long.
    pub fn to_flat(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.rows.len() * self.n_qubits);
        for &row in &self.rows {
            out.extend((0..self.n_qubits).map(|q| ((row >> q) & 1) as u8));
        }
        out
    }

    /// Same bits with the row order flipped.
    pub fn reversed(&self, label: Label) -> Self {
        let mut rows = self.rows.clone();
        rows.reverse();
        Self {
            n_qubits: self.n_qubits,
            rows,
            label,
        }
    }
}

/// One unit run: a basis state, one step unitary, one full measurement.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RawStepRecord {
    pub initial: Bitstring,
    pub outcome: Bitstring,
    pub direction: Direction,
}

pub(crate) fn check_count(count: usize) -> Result<()> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    Ok(())
}
