//! MLP models, losses, optimizers and the mini-batch training loop.

mod loss;
mod mlp;
mod optim;
mod train;

pub use loss::{bce, focal, mse, LossKind, PROB_EPS};
pub use mlp::{forward, Activation, Head, Layer, MlpArchitecture, ParamSet};
pub use optim::{OptimizerKind, OptimizerState};
pub use train::{evaluate_loss, train, BatchSampler, ShuffledBatches, TrainConfig, TrainOutcome};
