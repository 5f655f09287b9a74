//! Dense `f64` tensors with reverse-mode differentiation, a message-passing
//! network that predicts satisfiability from MILP graphs, and its training
//! loop.

pub mod checkpoint;
pub mod error;
pub mod gnn;
pub mod loss;
pub mod optim;
pub mod tape;
pub mod tensor;
pub mod train;

pub use checkpoint::{load_model, Checkpoint};
pub use error::NnError;
pub use gnn::{Backward, GnnConfig, GnnModel, Mlp};
pub use loss::{classify, loss, LossKind};
pub use optim::{adam_step, AdamState};
pub use tensor::Tensor;
pub use train::{evaluate, train, train_from, Evaluation, Metrics, Sample, Splits, TrainConfig, TrainOutcome};
