use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{op}: expected shape {expected:?}, found {found:?}")]
    ShapeMismatch {
        op: &'static str,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{0}: backward called without a cached forward pass")]
    NoForwardCache(&'static str),
    #[error("checkpoint line {line}: {message}")]
    Checkpoint { line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape_mismatch<T>(op: &'static str, expected: &[usize], found: &[usize]) -> Result<T> {
    Err(Error::ShapeMismatch {
        op,
        expected: expected.to_vec(),
        found: found.to_vec(),
    })
}
