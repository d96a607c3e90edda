//! Dense tensors, reverse-mode differentiation, Adam and checkpoints.

pub mod adam;
pub mod checkpoint;
pub mod init;
pub mod tape;
pub mod tensor;

pub use adam::{clip_global_norm, AdamState};
pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT};
pub use init::{seeded_rng, xavier_uniform, SeededRng};
pub use tape::{cross_entropy, linear, matmul, softmax, Gradients, Tape, Var, LOG_FLOOR};
pub use tensor::Tensor;
