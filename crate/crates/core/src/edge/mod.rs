//! Trainable edge models: architectures, losses, optimizer, scheduler and
//! the training loop.

mod checkpoint;
mod loss;
mod model;
mod optim;
mod train;

pub use checkpoint::{decode_model, encode_model, load_model, save_model};
pub use loss::{composite_loss, loss_with_grad, LossSpec};
pub use model::{Arch, EdgeModel, SHALLOW_WIDTH};
pub use optim::{
    plateau_step, sgd_nesterov_step, OptimizerState, PlateauConfig, SchedulerState, SgdConfig,
};
pub use train::{train_edge, train_edge_probed, Probe, ProbeSnapshot, TrainConfig, TrainReport};
