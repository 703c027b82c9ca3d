//! Model checkpoint container.
//!
//! A checkpoint is an ASCII header followed by raw array data:
//!
//! ```text
//! chronos-checkpoint v1
//! model <kind>
//! seed <u64>
//! epoch <count>
//! history <comma-separated losses, or ->
//! meta <key> <value to end of line>      (zero or more)
//! layer <layer spec>                     (zero or more, in model order)
//! array <name> <d1>x<d2>x…               (one per array, in data order)
//! end
//! ```
//!
//! After the `end\n` line come the arrays, concatenated in header order, each
//! as its row-major values in little-endian IEEE-754 binary64. Nothing may
//! follow the last array.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::layers::LayerSpec;
use crate::{Error, Result, Tensor};

pub const CHECKPOINT_MAGIC: &str = "chronos-checkpoint v1";

#[derive(Clone, Debug, PartialEq)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl NamedArray {
    pub fn from_tensor(name: impl Into<String>, t: &Tensor) -> Self {
        Self {
            name: name.into(),
            shape: t.shape().to_vec(),
            data: t.data().to_vec(),
        }
    }

    pub fn to_tensor(&self) -> Result<Tensor> {
        Tensor::new(&self.shape, self.data.clone())
    }

    /// Copy into `target`, which must already have this array's shape.
    pub fn copy_into(&self, target: &mut Tensor) -> Result<()> {
        if target.shape() != self.shape.as_slice() {
            return Err(Error::ShapeMismatch {
                op: "checkpoint array",
                expected: target.shape().to_vec(),
                found: self.shape.clone(),
            });
        }
        target.data_mut().copy_from_slice(&self.data);
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelCheckpoint {
    pub model_kind: String,
    pub seed: u64,
    pub epoch: usize,
    pub loss_history: Vec<f64>,
    /// Free-form settings; keys contain no whitespace, values no newlines.
    pub metadata: BTreeMap<String, String>,
    pub layers: Vec<LayerSpec>,
    pub arrays: Vec<NamedArray>,
}

fn header_err<T>(line: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Checkpoint {
        line,
        message: message.into(),
    })
}

impl ModelCheckpoint {
    pub fn array(&self, name: &str) -> Option<&NamedArray> {
        self.arrays.iter().find(|a| a.name == name)
    }

    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        let mut header = String::new();
        header.push_str(CHECKPOINT_MAGIC);
        header.push('\n');
        header.push_str(&format!(
            "model {}\nseed {}\nepoch {}\n",
            self.model_kind, self.seed, self.epoch
        ));
        if self.loss_history.is_empty() {
            header.push_str("history -\n");
        } else {
            let h: Vec<String> = self.loss_history.iter().map(|x| format!("{x:?}")).collect();
            header.push_str(&format!("history {}\n", h.join(",")));
        }
        for (k, v) in &self.metadata {
            header.push_str(&format!("meta {k} {v}\n"));
        }
        for l in &self.layers {
            header.push_str(&format!("layer {l}\n"));
        }
        for a in &self.arrays {
            let dims: Vec<String> = a.shape.iter().map(usize::to_string).collect();
            header.push_str(&format!("array {} {}\n", a.name, dims.join("x")));
        }
        header.push_str("end\n");
        w.write_all(header.as_bytes())?;
        let mut buf = Vec::new();
        for a in &self.arrays {
            buf.clear();
            buf.reserve(a.data.len() * 8);
            for x in &a.data {
                buf.extend_from_slice(&x.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to memory cannot fail");
        out
    }

    pub fn read_from(r: &mut impl BufRead) -> Result<Self> {
        let mut ckpt = Self::default();
        let mut line = String::new();
        let mut number = 0;
        let mut seen = [false; 4];
        let io_err = |e: std::io::Error, n: usize| Error::Checkpoint {
            line: n,
            message: e.to_string(),
        };
        loop {
            line.clear();
            number += 1;
            if r.read_line(&mut line).map_err(|e| io_err(e, number))? == 0 {
                return header_err(number, "header ends before 'end'");
            }
            let text = line.strip_suffix('\n').unwrap_or(&line);
            if number == 1 {
                if text != CHECKPOINT_MAGIC {
                    return header_err(1, format!("expected '{CHECKPOINT_MAGIC}'"));
                }
                continue;
            }
            if text == "end" {
                break;
            }
            let (key, rest) = text.split_once(' ').unwrap_or((text, ""));
            match key {
                "model" => {
                    ckpt.model_kind = rest.to_string();
                    seen[0] = true;
                }
                "seed" => {
                    ckpt.seed = rest.parse().or_else(|_| header_err(number, "bad seed"))?;
                    seen[1] = true;
                }
                "epoch" => {
                    ckpt.epoch = rest.parse().or_else(|_| header_err(number, "bad epoch"))?;
                    seen[2] = true;
                }
                "history" => {
                    if rest != "-" {
                        ckpt.loss_history = rest
                            .split(',')
                            .map(|x| x.parse::<f64>())
                            .collect::<std::result::Result<_, _>>()
                            .or_else(|_| header_err(number, "bad loss history"))?;
                    }
                    seen[3] = true;
                }
                "meta" => {
                    let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
                    if k.is_empty() {
                        return header_err(number, "meta line without a key");
                    }
                    ckpt.metadata.insert(k.to_string(), v.to_string());
                }
                "layer" => {
                    let spec = rest
                        .parse::<LayerSpec>()
                        .or_else(|e| header_err(number, e.to_string()))?;
                    ckpt.layers.push(spec);
                }
                "array" => {
                    let (name, dims) = rest
                        .split_once(' ')
                        .ok_or(())
                        .or_else(|_| header_err(number, "array line needs a name and a shape"))?;
                    let shape = dims
                        .split('x')
                        .map(str::parse::<usize>)
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .or_else(|_| header_err(number, format!("bad shape '{dims}'")))?;
                    if ckpt.arrays.iter().any(|a| a.name == name) {
                        return header_err(number, format!("duplicate array '{name}'"));
                    }
                    ckpt.arrays.push(NamedArray {
                        name: name.to_string(),
                        shape,
                        data: Vec::new(),
                    });
                }
                other => return header_err(number, format!("unknown header key '{other}'")),
            }
        }
        for (i, key) in ["model", "seed", "epoch", "history"].iter().enumerate() {
            if !seen[i] {
                return header_err(number, format!("header lacks '{key}'"));
            }
        }
        let mut bytes = [0u8; 8];
        for a in &mut ckpt.arrays {
            let n: usize = a.shape.iter().product();
            a.data.reserve(n);
            for _ in 0..n {
                r.read_exact(&mut bytes)
                    .or_else(|_| header_err(number, format!("data for array '{}' is truncated", a.name)))?;
                a.data.push(f64::from_le_bytes(bytes));
            }
        }
        let mut extra = [0u8; 1];
        if r.read(&mut extra).map_err(|e| io_err(e, number))? != 0 {
            return header_err(number, "unexpected bytes after the last array");
        }
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        atomic_write(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::read_from(&mut std::io::BufReader::new(file))
    }
}

/// Write `bytes` to a temporary file beside `path`, then rename it over
/// `path`, so readers never see a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
