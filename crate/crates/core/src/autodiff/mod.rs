//! Reverse-mode automatic differentiation over dense `f64` tensors, with
//! support for differentiating through gradients.

mod finite_diff;
mod graph;
mod tensor;

pub use finite_diff::finite_diff_grad;
pub use graph::{Graph, Var};
pub use tensor::Tensor;
