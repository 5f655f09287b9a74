use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("graph features {found:?} do not match the model's expected {expected:?}")]
    DimensionMismatch { expected: (usize, usize), found: (usize, usize) },
    #[error("{predictions} predictions against {targets} targets")]
    LengthMismatch { predictions: usize, targets: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("checkpoint JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("split {0} is empty")]
    EmptySplit(&'static str),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] satgnn_core::GraphError),
}
