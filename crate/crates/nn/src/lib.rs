//! Tensors, layers with manual backpropagation, losses, Adam, Xavier
//! initialisation, a checkpoint container and a gradient-check harness.
//!
//! Everything is `f64`. Batched tensors put the batch on the leading axis.

mod checkpoint;
mod error;
pub mod gradcheck;
mod init;
pub mod layers;
mod loss;
mod optim;
mod sequential;
mod tensor;

pub use checkpoint::{atomic_write, ModelCheckpoint, NamedArray, CHECKPOINT_MAGIC};
pub use error::{Error, Result};
pub use init::{fans, xavier_init};
pub use layers::{build_layer, Layer, LayerSpec, Mode, Param};
pub use loss::{bce_loss, mse_loss, BCE_CLAMP};
pub use optim::{adam_step, Adam, AdamConfig, AdamState};
pub use sequential::Sequential;
pub use tensor::Tensor;

#[doc(hidden)]
pub use tensor::gemm;
