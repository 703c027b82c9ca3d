use std::path::PathBuf;

use crate::traj1::Traj1Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Traj1(#[from] Traj1Error),
}

impl CliError {
    /// 1 usage, 2 data, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) | CliError::Io { .. } | CliError::Traj1(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<chronos_core::Error> for CliError {
    fn from(e: chronos_core::Error) -> Self {
        match e {
            chronos_core::Error::InvalidArgument(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<chronos_nn::Error> for CliError {
    fn from(e: chronos_nn::Error) -> Self {
        match e {
            chronos_nn::Error::Io { path, source } => CliError::Io { path, source },
            chronos_nn::Error::InvalidArgument(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<chronos_learn::Error> for CliError {
    fn from(e: chronos_learn::Error) -> Self {
        use chronos_learn::Error as E;
        match e {
            E::Core(e) => e.into(),
            E::Nn(e) => e.into(),
            E::InvalidArgument(_) => CliError::Usage(e.to_string()),
            E::InvalidData(_) => CliError::Data(e.to_string()),
            E::Numeric(_) => CliError::Numeric(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
