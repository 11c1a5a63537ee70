//! Small deterministic neural toolkit: dense, ReLU, batch norm, 2-D
//! convolution, LSTM and ConvLSTM layers with reverse-mode gradients, MSE
//! loss and ADAM.
//!
//! Tensors are row-major `f64`. Dense weights are `[outputs][inputs]`,
//! convolution kernels `[out][in][kh][kw]` (cross-correlation), LSTM weights
//! `[4H][In + H]` with gate blocks in the order forget, input, cell, output.

pub mod checkpoint;
pub mod gradcheck;
pub mod identity;
mod layers;
mod net;
mod tensor;
pub mod train;

pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, save_loss_history, write_checkpoint,
};
pub use gradcheck::{grad_check, GradReport};
pub use layers::LayerSpec;
pub use net::{Net, Skip, StepState, Trace};
pub use tensor::Tensor;
pub use train::{mse, train, Adam, TrainConfig};
