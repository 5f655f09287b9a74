use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}: no such file or directory")]
    MissingFile(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("{0}")]
    Input(String),
    #[error("cannot write {0}: {1}")]
    Write(String, std::io::Error),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    /// Process exit status. Usage errors exit with 2 from the argument parser.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::MissingFile(_) => 3,
            CliError::Dimension(_) => 4,
            _ => 1,
        }
    }
}

impl From<satgnn_nn::NnError> for CliError {
    fn from(e: satgnn_nn::NnError) -> Self {
        use satgnn_nn::NnError;
        match e {
            NnError::DimensionMismatch { .. } => CliError::Dimension(e.to_string()),
            NnError::Io { ref source, ref path } if source.kind() == std::io::ErrorKind::NotFound => {
                CliError::MissingFile(path.clone())
            }
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<satgnn_core::GenError> for CliError {
    fn from(e: satgnn_core::GenError) -> Self {
        use satgnn_core::GenError;
        match e {
            GenError::Io { ref source, ref path } if source.kind() == std::io::ErrorKind::NotFound => {
                CliError::MissingFile(path.clone())
            }
            GenError::InvalidParams(_) | GenError::TooManyClauses { .. } => CliError::Input(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}
