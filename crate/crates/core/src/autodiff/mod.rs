//! Small reverse-mode differentiation engine over dense `f64` matrices,
//! plus the Adam optimizer.

mod adam;
mod tape;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use tape::{Gradients, NodeId, Op, Tape};
pub use tensor::Tensor;
