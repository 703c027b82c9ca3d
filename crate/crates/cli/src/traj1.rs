//! TRAJ1 trajectory files.
//!
//! ```text
//! #TRAJ v1 qubits=<Q> steps=<S> label=<forward|backward|none> count=<C>
//! <C lines of (S+1)·Q characters '0'/'1', step-major, qubit-minor>
//! ```
//!
//! A file holds records of one shape and one label. The empty dataset is
//! written as `qubits=0 steps=0 label=none count=0`.

use std::path::{Path, PathBuf};

use chronos_core::protocol::{Label, TrajectoryRecord};
use chronos_core::qcore::MAX_QUBITS;

pub const MAGIC: &str = "#TRAJ v1";

const MAX_ROW_CHARS: usize = 1 << 24;

#[derive(Debug, thiserror::Error)]
pub enum Traj1Error {
    #[error("line {line}: malformed header: {message}")]
    Header { line: usize, message: String },
    #[error("line {line}, column {column}: bad character '{}'", found.escape_ascii())]
    BadCharacter { line: usize, column: usize, found: u8 },
    #[error("line {line}: record has {found} characters, expected {expected}")]
    RowLength { line: usize, expected: usize, found: usize },
    #[error("line {line}: header declares {expected} records, found {found}")]
    CountMismatch { line: usize, expected: usize, found: usize },
    #[error("cannot write as one TRAJ1 file: {0}")]
    Inconsistent(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Traj1Error>;

/// Shape and label shared by all records of a file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Traj1Header {
    pub qubits: usize,
    pub steps: usize,
    pub label: Label,
    pub count: usize,
}

impl Traj1Header {
    pub fn of(records: &[TrajectoryRecord]) -> Result<Self> {
        let Some(first) = records.first() else {
            return Ok(Self {
                qubits: 0,
                steps: 0,
                label: Label::Unlabeled,
                count: 0,
            });
        };
        let header = Self {
            qubits: first.n_qubits(),
            steps: first.n_steps(),
            label: first.label(),
            count: records.len(),
        };
        for (i, r) in records.iter().enumerate() {
            if r.n_qubits() != header.qubits || r.n_steps() != header.steps {
                return Err(Traj1Error::Inconsistent(format!(
                    "record {i} is {}x{}, record 0 is {}x{}",
                    r.n_rows(),
                    r.n_qubits(),
                    header.steps + 1,
                    header.qubits
                )));
            }
            if r.label() != header.label {
                return Err(Traj1Error::Inconsistent(format!(
                    "record {i} is labelled {}, record 0 {}",
                    r.label(),
                    header.label
                )));
            }
        }
        Ok(header)
    }

    pub fn row_len(&self) -> usize {
        (self.steps + 1) * self.qubits
    }

    fn line(&self) -> String {
        format!(
            "{MAGIC} qubits={} steps={} label={} count={}",
            self.qubits, self.steps, self.label, self.count
        )
    }

    fn parse(text: &[u8]) -> Result<Self> {
        let bad = |message: String| Traj1Error::Header { line: 1, message };
        let text = std::str::from_utf8(text).map_err(|_| bad("not ASCII".into()))?;
        let rest = text
            .strip_prefix(MAGIC)
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(|| bad(format!("expected it to start with '{MAGIC} '")))?;
        let fields: Vec<&str> = rest.split(' ').collect();
        let keys = ["qubits", "steps", "label", "count"];
        if fields.len() != keys.len() {
            return Err(bad(format!("expected the fields {}", keys.join(", "))));
        }
        let mut values = [""; 4];
        for ((field, key), value) in fields.iter().zip(keys).zip(&mut values) {
            *value = field
                .strip_prefix(key)
                .and_then(|v| v.strip_prefix('='))
                .ok_or_else(|| bad(format!("expected '{key}=' but found '{field}'")))?;
        }
        let number = |key: &str, v: &str| -> Result<usize> {
            if v.is_empty() || !v.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad(format!("{key} must be a non-negative integer, got '{v}'")));
            }
            v.parse().map_err(|_| bad(format!("{key} value '{v}' is too large")))
        };
        let header = Self {
            qubits: number("qubits", values[0])?,
            steps: number("steps", values[1])?,
            label: values[2]
                .parse()
                .map_err(|_| bad(format!("label must be forward, backward or none, got '{}'", values[2])))?,
            count: number("count", values[3])?,
        };
        if header.count > 0 && !(1..=MAX_QUBITS).contains(&header.qubits) {
            return Err(bad(format!(
                "qubits must lie in 1..={MAX_QUBITS}, got {}",
                header.qubits
            )));
        }
        let width = header.steps.checked_add(1).and_then(|r| r.checked_mul(header.qubits));
        if !width.is_some_and(|w| w <= MAX_ROW_CHARS) {
            return Err(bad(format!("records wider than {MAX_ROW_CHARS} characters")));
        }
        Ok(header)
    }
}

/// File contents for `records`, byte for byte.
pub fn encode(records: &[TrajectoryRecord]) -> Result<Vec<u8>> {
    let header = Traj1Header::of(records)?;
    let mut out = Vec::with_capacity(64 + records.len() * (header.row_len() + 1));
    out.extend_from_slice(header.line().as_bytes());
    out.push(b'\n');
    for r in records {
        out.extend(r.to_flat().into_iter().map(|b| b'0' + b));
        out.push(b'\n');
    }
    Ok(out)
}

/// Parses and validates a whole file; the header must agree with the body.
pub fn decode(bytes: &[u8]) -> Result<Vec<TrajectoryRecord>> {
    let body = bytes.strip_suffix(b"\n").unwrap_or(bytes);
    let mut lines = body.split(|&b| b == b'\n');
    let header = Traj1Header::parse(lines.next().unwrap_or_default())?;
    let row_len = header.row_len();
    let body_lines: Vec<&[u8]> = if body.contains(&b'\n') {
        lines.collect()
    } else {
        Vec::new()
    };
    let mut records = Vec::with_capacity(header.count.min(body_lines.len()));
    let mut bits = vec![0u8; row_len];
    for (i, line) in body_lines.iter().enumerate() {
        let number = i + 2;
        if i >= header.count {
            return Err(Traj1Error::CountMismatch {
                line: number,
                expected: header.count,
                found: body_lines.len(),
            });
        }
        for (c, (&byte, bit)) in line.iter().zip(bits.iter_mut()).enumerate() {
            *bit = match byte {
                b'0' => 0,
                b'1' => 1,
                found => {
                    return Err(Traj1Error::BadCharacter {
                        line: number,
                        column: c + 1,
                        found,
                    })
                }
            };
        }
        if line.len() != row_len {
            if let Some(c) = line.iter().skip(row_len).position(|b| !matches!(b, b'0' | b'1')) {
                return Err(Traj1Error::BadCharacter {
                    line: number,
                    column: row_len + c + 1,
                    found: line[row_len + c],
                });
            }
            return Err(Traj1Error::RowLength {
                line: number,
                expected: row_len,
                found: line.len(),
            });
        }
        let record =
            TrajectoryRecord::from_flat(header.qubits, &bits, header.label).map_err(|e| Traj1Error::Header {
                line: 1,
                message: e.to_string(),
            })?;
        records.push(record);
    }
    if records.len() != header.count {
        return Err(Traj1Error::CountMismatch {
            line: body_lines.len() + 2,
            expected: header.count,
            found: records.len(),
        });
    }
    Ok(records)
}

/// Written through a temporary file and renamed into place.
pub fn write_traj1(path: &Path, records: &[TrajectoryRecord]) -> Result<()> {
    persist(path, &encode(records)?)
}

pub(crate) fn persist(path: &Path, bytes: &[u8]) -> Result<()> {
    chronos_nn::atomic_write(path, bytes).map_err(|e| match e {
        chronos_nn::Error::Io { path, source } => Traj1Error::Io { path, source },
        other => Traj1Error::Io {
            path: path.to_path_buf(),
            source: std::io::Error::other(other.to_string()),
        },
    })
}

pub fn read_traj1(path: &Path) -> Result<Vec<TrajectoryRecord>> {
    let bytes = std::fs::read(path).map_err(|source| Traj1Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode(&bytes)
}
