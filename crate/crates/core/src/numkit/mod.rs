//! Minimal dense-tensor kernel: reverse-mode differentiation plus Adam.

mod adam;
mod tensor;

pub use adam::{zero_grads, Adam, LrSchedule};
pub use tensor::{Tensor, LOG_FLOOR};
