//! Energy, heat, entropy and fidelity statistics of trajectory datasets.

use crate::protocol::{StateTrajectory, TrajectoryRecord};
use crate::qcore::{subsystem_energy, von_neumann_entropy};
use crate::{Error, Result};

/// Plug-in frequencies of the basis strings observed at one step.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalState {
    pub step: usize,
    pub probabilities: Vec<f64>,
}

/// Per-step statistics. Vectors a series was not asked to compute are empty.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ThermoSeries {
    pub steps: Vec<usize>,
    pub electron_energy: Vec<f64>,
    pub bath_mean_energy: Vec<f64>,
    /// Standard deviation of the per-qubit bath energies divided by
    /// `√n_bath`.
    pub bath_energy_stddev_of_mean: Vec<f64>,
    /// Nats.
    pub entropy: Vec<f64>,
    /// Records behind the series; 0 for exact (oracle) series.
    pub sample_count: usize,
    pub n_bath: usize,
}

/// Heat absorbed by the central qubit and by the whole bath at each step.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatSeries {
    pub central: Vec<f64>,
    pub bath: Vec<f64>,
    /// `central + bath` per step; zero when energy is conserved.
    pub total: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetFidelity {
    pub mean: f64,
    pub per_step: Vec<f64>,
    /// Population standard deviation of `per_step`.
    pub std_across_steps: f64,
}

/// Shape shared by every record, or an error.
fn dataset_shape(dataset: &[TrajectoryRecord]) -> Result<(usize, usize)> {
    let first = dataset.first().ok_or(Error::EmptyDataset)?;
    let shape = (first.n_rows(), first.n_qubits());
    for r in dataset {
        if r.n_qubits() != shape.1 {
            return Err(Error::DimensionMismatch {
                expected: shape.1,
                found: r.n_qubits(),
            });
        }
        if r.n_rows() != shape.0 {
            return Err(Error::DimensionMismatch {
                expected: shape.0,
                found: r.n_rows(),
            });
        }
    }
    Ok(shape)
}

fn counts_at(dataset: &[TrajectoryRecord], n_qubits: usize, step: usize) -> Vec<u64> {
    let mut counts = vec![0u64; 1 << n_qubits];
    for r in dataset {
        counts[r.row_index(step)] += 1;
    }
    counts
}

pub fn empirical_state(dataset: &[TrajectoryRecord], step: usize) -> Result<EmpiricalState> {
    let (rows, n_qubits) = dataset_shape(dataset)?;
    if step >= rows {
        return Err(Error::InvalidArgument(format!("step {step} outside 0..{rows}")));
    }
    let total = dataset.len() as f64;
    Ok(EmpiricalState {
        step,
        probabilities: counts_at(dataset, n_qubits, step)
            .into_iter()
            .map(|c| c as f64 / total)
            .collect(),
    })
}

/// Mean Z eigenvalue per qubit at each step: bit 0 counts +1, bit 1 counts −1.
fn qubit_energies(dataset: &[TrajectoryRecord], rows: usize, n_qubits: usize) -> Vec<Vec<f64>> {
    let mut ones = vec![vec![0u64; n_qubits]; rows];
    for r in dataset {
        for (k, acc) in ones.iter_mut().enumerate() {
            let row = r.row_index(k);
            for (j, c) in acc.iter_mut().enumerate() {
                *c += ((row >> j) & 1) as u64;
            }
        }
    }
    let n = dataset.len() as f64;
    ones.into_iter()
        .map(|acc| acc.into_iter().map(|c| 1.0 - 2.0 * c as f64 / n).collect())
        .collect()
}

fn bath_summary(per_qubit: &[f64]) -> (f64, f64) {
    let bath = &per_qubit[1..];
    if bath.is_empty() {
        return (0.0, 0.0);
    }
    let m = bath.len() as f64;
    let mean = bath.iter().sum::<f64>() / m;
    if bath.len() < 2 {
        return (mean, 0.0);
    }
    let var = bath.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Energies only; `entropy` is left empty.
pub fn energy_series(dataset: &[TrajectoryRecord]) -> Result<ThermoSeries> {
    let (rows, n_qubits) = dataset_shape(dataset)?;
    let mut series = ThermoSeries {
        steps: (0..rows).collect(),
        sample_count: dataset.len(),
        n_bath: n_qubits - 1,
        ..Default::default()
    };
    for e in qubit_energies(dataset, rows, n_qubits) {
        let (mean, sem) = bath_summary(&e);
        series.electron_energy.push(e[0]);
        series.bath_mean_energy.push(mean);
        series.bath_energy_stddev_of_mean.push(sem);
    }
    Ok(series)
}

/// Entropy of a discrete distribution estimated from counts.
pub trait EntropyEstimator: Send + Sync {
    fn name(&self) -> &'static str;

    /// Nats.
    fn estimate(&self, counts: &[u64]) -> f64;
}

/// Shannon entropy of the observed frequencies.
pub struct PlugIn;

impl EntropyEstimator for PlugIn {
    fn name(&self) -> &'static str {
        "plug-in"
    }

    fn estimate(&self, counts: &[u64]) -> f64 {
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return 0.0;
        }
        let n = n as f64;
        counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .sum()
    }
}

/// Plug-in plus `(m − 1) / 2N`, `m` the number of occupied bins.
pub struct MillerMadow;

impl EntropyEstimator for MillerMadow {
    fn name(&self) -> &'static str {
        "miller-madow"
    }

    fn estimate(&self, counts: &[u64]) -> f64 {
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return 0.0;
        }
        let occupied = counts.iter().filter(|&&c| c > 0).count() as f64;
        PlugIn.estimate(counts) + (occupied - 1.0) / (2.0 * n as f64)
    }
}

pub fn entropy_estimator(name: &str) -> Result<Box<dyn EntropyEstimator>> {
    match name {
        "plug-in" => Ok(Box::new(PlugIn)),
        "miller-madow" => Ok(Box::new(MillerMadow)),
        other => Err(Error::InvalidArgument(format!(
            "unknown entropy estimator {other:?} (expected plug-in or miller-madow)"
        ))),
    }
}

/// Plug-in entropy per step; energies are left empty.
pub fn entropy_series(dataset: &[TrajectoryRecord]) -> Result<ThermoSeries> {
    entropy_series_with(dataset, &PlugIn)
}

pub fn entropy_series_with(dataset: &[TrajectoryRecord], estimator: &dyn EntropyEstimator) -> Result<ThermoSeries> {
    let (rows, n_qubits) = dataset_shape(dataset)?;
    Ok(ThermoSeries {
        steps: (0..rows).collect(),
        entropy: (0..rows)
            .map(|k| estimator.estimate(&counts_at(dataset, n_qubits, k)))
            .collect(),
        sample_count: dataset.len(),
        n_bath: n_qubits - 1,
        ..Default::default()
    })
}

/// Energies and entropy together.
pub fn thermo_series(dataset: &[TrajectoryRecord], estimator: &dyn EntropyEstimator) -> Result<ThermoSeries> {
    let mut series = energy_series(dataset)?;
    series.entropy = entropy_series_with(dataset, estimator)?.entropy;
    Ok(series)
}

/// Exact series of an ensemble state trajectory.
pub fn oracle_series(trajectory: &StateTrajectory) -> Result<ThermoSeries> {
    let n_qubits = trajectory.initial().n_qubits();
    let mut series = ThermoSeries {
        steps: (0..trajectory.states.len()).collect(),
        sample_count: 0,
        n_bath: n_qubits - 1,
        ..Default::default()
    };
    for rho in &trajectory.states {
        let per_qubit = (0..n_qubits)
            .map(|j| subsystem_energy(rho, &[j]))
            .collect::<Result<Vec<_>>>()?;
        let (mean, sem) = bath_summary(&per_qubit);
        series.electron_energy.push(per_qubit[0]);
        series.bath_mean_energy.push(mean);
        series.bath_energy_stddev_of_mean.push(sem);
        series.entropy.push(von_neumann_entropy(rho));
    }
    Ok(series)
}

/// First differences of the central and total bath energies.
pub fn heat_series(series: &ThermoSeries) -> Result<HeatSeries> {
    let e_a = &series.electron_energy;
    if e_a.len() < 2 || series.bath_mean_energy.len() != e_a.len() {
        return Err(Error::InvalidArgument(
            "heat needs energies at two or more steps".into(),
        ));
    }
    let bath_total: Vec<f64> = series
        .bath_mean_energy
        .iter()
        .map(|m| m * series.n_bath as f64)
        .collect();
    let central: Vec<f64> = e_a.windows(2).map(|w| w[1] - w[0]).collect();
    let bath: Vec<f64> = bath_total.windows(2).map(|w| w[1] - w[0]).collect();
    let total = central.iter().zip(&bath).map(|(a, b)| a + b).collect();
    Ok(HeatSeries { central, bath, total })
}

/// Step-averaged fidelity between the empirical diagonal states of two
/// datasets of equal shape.
pub fn dataset_fidelity(generated: &[TrajectoryRecord], reference: &[TrajectoryRecord]) -> Result<DatasetFidelity> {
    let (rows, n_qubits) = dataset_shape(generated)?;
    let reference_shape = dataset_shape(reference)?;
    if reference_shape != (rows, n_qubits) {
        return Err(Error::DimensionMismatch {
            expected: rows * n_qubits,
            found: reference_shape.0 * reference_shape.1,
        });
    }
    let (ng, nr) = (generated.len() as f64, reference.len() as f64);
    let per_step: Vec<f64> = (0..rows)
        .map(|k| {
            let g = counts_at(generated, n_qubits, k);
            let r = counts_at(reference, n_qubits, k);
            let bc: f64 = g
                .iter()
                .zip(&r)
                .filter(|(a, b)| **a > 0 && **b > 0)
                .map(|(&a, &b)| (a as f64 / ng * b as f64 / nr).sqrt())
                .sum();
            (bc * bc).min(1.0)
        })
        .collect();
    let mean = per_step.iter().sum::<f64>() / rows as f64;
    let var = per_step.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / rows as f64;
    Ok(DatasetFidelity {
        mean,
        per_step,
        std_across_steps: var.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::Label;
    use crate::qcore::Bitstring;

    fn record(rows: &[u64], n: usize) -> TrajectoryRecord {
        let rows: Vec<_> = rows.iter().map(|&v| Bitstring::new(n, v).unwrap()).collect();
        TrajectoryRecord::new(&rows, Label::Forward).unwrap()
    }

    #[test]
    fn identical_records_one_hot() {
        let data = vec![record(&[5, 3], 3); 4];
        let s = empirical_state(&data, 1).unwrap();
        assert_eq!(s.probabilities[3], 1.0);
        assert_eq!(s.probabilities.iter().sum::<f64>(), 1.0);
        assert_eq!(entropy_series(&data).unwrap().entropy, vec![0.0, 0.0]);
    }

    #[test]
    fn two_records_split_evenly() {
        let data = vec![record(&[0, 1], 2), record(&[0, 2], 2)];
        let p = empirical_state(&data, 1).unwrap().probabilities;
        assert_eq!(p, vec![0.0, 0.5, 0.5, 0.0]);
        assert!(empirical_state(&data, 2).is_err());
        assert!(matches!(empirical_state(&[], 0), Err(Error::EmptyDataset)));
    }

    #[test]
    fn all_zero_records() {
        let data = vec![record(&[0, 0, 0], 10); 3];
        let s = energy_series(&data).unwrap();
        assert_eq!(s.electron_energy, vec![1.0; 3]);
        assert_eq!(s.bath_mean_energy, vec![1.0; 3]);
        assert_eq!(s.bath_energy_stddev_of_mean, vec![0.0; 3]);
        let h = heat_series(&s).unwrap();
        assert_eq!(h.total, vec![0.0, 0.0]);
    }

    #[test]
    fn bath_spread() {
        // bath qubits 1 and 2 at +1, qubit 3 at -1
        let data = vec![record(&[0b1000], 4)];
        let s = energy_series(&data).unwrap();
        assert!((s.bath_mean_energy[0] - 1.0 / 3.0).abs() < 1e-15);
        // sample sd = sqrt(4/3), divided by sqrt(3)
        assert!((s.bath_energy_stddev_of_mean[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn heat_needs_two_steps() {
        let s = ThermoSeries {
            electron_energy: vec![1.0],
            bath_mean_energy: vec![1.0],
            ..Default::default()
        };
        assert!(heat_series(&s).is_err());
    }

    #[test]
    fn mismatched_shapes() {
        let a = vec![record(&[0, 1], 2)];
        let b = vec![record(&[0, 1, 1], 2)];
        assert!(dataset_fidelity(&a, &b).is_err());
        assert!(energy_series(&[a[0].clone(), b[0].clone()]).is_err());
    }

    #[test]
    fn fidelity_extremes() {
        let a = vec![record(&[0, 1], 2), record(&[3, 1], 2)];
        let f = dataset_fidelity(&a, &a).unwrap();
        assert!((f.mean - 1.0).abs() < 1e-12);
        assert!(f.std_across_steps < 1e-12);
        let b = vec![record(&[2, 2], 2)];
        assert_eq!(dataset_fidelity(&a, &b).unwrap().mean, 0.0);
    }

    #[test]
    fn miller_madow_adds_bias_term() {
        let counts = [3u64, 1, 0, 0];
        let plug = PlugIn.estimate(&counts);
        assert!((MillerMadow.estimate(&counts) - plug - 1.0 / 8.0).abs() < 1e-15);
        assert_eq!(entropy_estimator("plug-in").unwrap().name(), "plug-in");
        assert!(entropy_estimator("bayes").is_err());
    }
}
