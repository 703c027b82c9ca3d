//! Numeric tables as comma-separated text.

use std::path::Path;

use chronos_core::thermo::ThermoSeries;
use chronos_learn::classifier::LearningCurve;
use chronos_learn::generator::FidelityPoint;

use crate::error::{CliError, CliResult};

/// `%.15g`: fifteen significant digits, trailing zeros dropped, scientific
/// notation outside `1e-5 ≤ |x| < 1e15`.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.14e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent in scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..15).contains(&exp) {
        trim_zeros(format!("{:.*}", (14 - exp) as usize, x))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(mut s: String) -> String {
    if s.contains('.') {
        let keep = s.trim_end_matches('0').trim_end_matches('.').len();
        s.truncate(keep);
    }
    s
}

/// Named columns of numbers.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn push(&mut self, row: Vec<f64>) -> CliResult<()> {
        if row.len() != self.columns.len() {
            return Err(CliError::Data(format!(
                "row of {} values for {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|&v| format_number(v)))
                .expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    pub fn parse(bytes: &[u8]) -> CliResult<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
        let bad = |e: csv::Error| CliError::Data(format!("malformed CSV: {e}"));
        let mut table = Table::new(r.headers().map_err(bad)?.iter());
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(bad)?;
            let row = rec
                .iter()
                .map(|v| v.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| CliError::Data(format!("CSV row {}: non-numeric value", i + 2)))?;
            table.push(row)?;
        }
        Ok(table)
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        Ok(chronos_nn::atomic_write(path, &self.to_bytes())?)
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&bytes)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

/// `step, electron_energy, bath_mean_energy, bath_energy_sem, entropy`; an
/// empty column in the series is written as NaN.
pub fn thermo_table(series: &ThermoSeries) -> Table {
    let mut t = Table::new([
        "step",
        "electron_energy",
        "bath_mean_energy",
        "bath_energy_sem",
        "entropy",
    ]);
    let at = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(f64::NAN);
    for (k, &step) in series.steps.iter().enumerate() {
        t.push(vec![
            step as f64,
            at(&series.electron_energy, k),
            at(&series.bath_mean_energy, k),
            at(&series.bath_energy_stddev_of_mean, k),
            at(&series.entropy, k),
        ])
        .expect("five columns");
    }
    t
}

/// `epoch, train_loss, test_loss, test_accuracy`, epochs counted from 1.
pub fn learning_curve_table(curve: &LearningCurve) -> Table {
    let mut t = Table::new(["epoch", "train_loss", "test_loss", "test_accuracy"]);
    for (e, &loss) in curve.train_loss.iter().enumerate() {
        let at = |v: &[f64]| v.get(e).copied().unwrap_or(f64::NAN);
        t.push(vec![
            (e + 1) as f64,
            loss,
            at(&curve.test_loss),
            at(&curve.test_accuracy),
        ])
        .expect("four columns");
    }
    t
}

pub fn loss_table(history: &[f64]) -> Table {
    let mut t = Table::new(["epoch", "loss"]);
    for (e, &loss) in history.iter().enumerate() {
        t.push(vec![(e + 1) as f64, loss]).expect("two columns");
    }
    t
}

pub fn fidelity_table(curve: &[FidelityPoint]) -> Table {
    let mut t = Table::new(["epoch", "fidelity", "std_across_steps"]);
    for p in curve {
        t.push(vec![p.epoch as f64, p.mean, p.std_across_steps])
            .expect("three columns");
    }
    t
}

/// Per-step fidelity between two datasets.
pub fn step_fidelity_table(per_step: &[f64]) -> Table {
    let mut t = Table::new(["step", "fidelity"]);
    for (k, &f) in per_step.iter().enumerate() {
        t.push(vec![k as f64, f]).expect("two columns");
    }
    t
}

/// One row per record: `index, truth, cluster, pc1, pc2, …`. Unknown truth is
/// NaN.
pub fn projection_table(truth: &[Option<usize>], clusters: &[usize], projection: &[Vec<f64>]) -> CliResult<Table> {
    let dims = projection.first().map_or(0, Vec::len);
    let mut columns = vec!["index".to_string(), "truth".into(), "cluster".into()];
    columns.extend((1..=dims).map(|d| format!("pc{d}")));
    let mut t = Table::new(columns);
    for (i, ((tr, &c), p)) in truth.iter().zip(clusters).zip(projection).enumerate() {
        let mut row = vec![i as f64, tr.map_or(f64::NAN, |v| v as f64), c as f64];
        row.extend(p);
        t.push(row)?;
    }
    Ok(t)
}
