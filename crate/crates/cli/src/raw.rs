//! Single-step run files consumed by `assemble`.
//!
//! ```text
//! #RAW v1 qubits=<Q> direction=<forward|reverse> count=<C>
//! <initial> <outcome>      (C lines, Q characters each, qubit 0 first)
//! ```

use std::path::Path;

use chronos_core::protocol::{Direction, RawStepRecord};
use chronos_core::qcore::{Bitstring, MAX_QUBITS};

use crate::traj1::{Result, Traj1Error};

pub const MAGIC: &str = "#RAW v1";

pub fn encode(runs: &[RawStepRecord]) -> Result<Vec<u8>> {
    let (qubits, direction) = match runs.first() {
        Some(r) => (r.initial.len(), r.direction),
        None => (0, Direction::Forward),
    };
    if let Some(i) = runs
        .iter()
        .position(|r| r.direction != direction || r.initial.len() != qubits || r.outcome.len() != qubits)
    {
        return Err(Traj1Error::Inconsistent(format!(
            "run {i} differs from run 0 in direction or register size"
        )));
    }
    let mut out = format!("{MAGIC} qubits={qubits} direction={direction} count={}\n", runs.len()).into_bytes();
    for r in runs {
        out.extend(r.initial.to_bits().into_iter().map(|b| b'0' + b));
        out.push(b' ');
        out.extend(r.outcome.to_bits().into_iter().map(|b| b'0' + b));
        out.push(b'\n');
    }
    Ok(out)
}

fn header_error(message: impl Into<String>) -> Traj1Error {
    Traj1Error::Header {
        line: 1,
        message: message.into(),
    }
}

fn parse_header(line: &[u8]) -> Result<(usize, Direction, usize)> {
    let text = std::str::from_utf8(line).map_err(|_| header_error("not ASCII"))?;
    let rest = text
        .strip_prefix(MAGIC)
        .and_then(|r| r.strip_prefix(' '))
        .ok_or_else(|| header_error(format!("expected it to start with '{MAGIC} '")))?;
    let fields: Vec<&str> = rest.split(' ').collect();
    let keys = ["qubits", "direction", "count"];
    if fields.len() != keys.len() {
        return Err(header_error(format!("expected the fields {}", keys.join(", "))));
    }
    let mut values = [""; 3];
    for ((field, key), value) in fields.iter().zip(keys).zip(&mut values) {
        *value = field
            .strip_prefix(key)
            .and_then(|v| v.strip_prefix('='))
            .ok_or_else(|| header_error(format!("expected '{key}=' but found '{field}'")))?;
    }
    let qubits: usize = values[0]
        .parse()
        .map_err(|_| header_error(format!("bad qubit count '{}'", values[0])))?;
    let direction: Direction = values[1]
        .parse()
        .map_err(|_| header_error(format!("direction must be forward or reverse, got '{}'", values[1])))?;
    let count: usize = values[2]
        .parse()
        .map_err(|_| header_error(format!("bad record count '{}'", values[2])))?;
    if count > 0 && !(1..=MAX_QUBITS).contains(&qubits) {
        return Err(header_error(format!(
            "qubits must lie in 1..={MAX_QUBITS}, got {qubits}"
        )));
    }
    Ok((qubits, direction, count))
}

fn parse_bits(field: &[u8], line: usize, offset: usize) -> Result<Bitstring> {
    let mut bits = Vec::with_capacity(field.len());
    for (c, &b) in field.iter().enumerate() {
        bits.push(match b {
            b'0' => 0,
            b'1' => 1,
            found => {
                return Err(Traj1Error::BadCharacter {
                    line,
                    column: offset + c + 1,
                    found,
                })
            }
        });
    }
    Bitstring::from_bits(&bits).map_err(|e| header_error(e.to_string()))
}

pub fn decode(bytes: &[u8]) -> Result<Vec<RawStepRecord>> {
    let body = bytes.strip_suffix(b"\n").unwrap_or(bytes);
    let mut lines = body.split(|&b| b == b'\n');
    let (qubits, direction, count) = parse_header(lines.next().unwrap_or_default())?;
    let body_lines: Vec<&[u8]> = if body.contains(&b'\n') {
        lines.collect()
    } else {
        Vec::new()
    };
    if body_lines.len() > count {
        return Err(Traj1Error::CountMismatch {
            line: count + 2,
            expected: count,
            found: body_lines.len(),
        });
    }
    let mut runs = Vec::with_capacity(body_lines.len());
    for (i, line) in body_lines.iter().enumerate() {
        let number = i + 2;
        if line.len() != 2 * qubits + 1 {
            return Err(Traj1Error::RowLength {
                line: number,
                expected: 2 * qubits + 1,
                found: line.len(),
            });
        }
        if line[qubits] != b' ' {
            return Err(Traj1Error::BadCharacter {
                line: number,
                column: qubits + 1,
                found: line[qubits],
            });
        }
        runs.push(RawStepRecord {
            initial: parse_bits(&line[..qubits], number, 0)?,
            outcome: parse_bits(&line[qubits + 1..], number, qubits + 1)?,
            direction,
        });
    }
    if runs.len() != count {
        return Err(Traj1Error::CountMismatch {
            line: body_lines.len() + 2,
            expected: count,
            found: runs.len(),
        });
    }
    Ok(runs)
}

pub fn write_raw(path: &Path, runs: &[RawStepRecord]) -> Result<()> {
    crate::traj1::persist(path, &encode(runs)?)
}

pub fn read_raw(path: &Path) -> Result<Vec<RawStepRecord>> {
    let bytes = std::fs::read(path).map_err(|source| Traj1Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode(&bytes)
}
