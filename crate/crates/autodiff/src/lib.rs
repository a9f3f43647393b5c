//! A small dense-tensor library with a tape-based reverse-mode autodiff
//! engine, the convolution/normalization/activation/loss operations needed by
//! image-to-image GANs, the Adam optimizer and a checkpoint file format.
//!
//! Operations are recorded on a [`Graph`] as they execute; nodes are
//! appended in evaluation order, so walking the tape backwards is a valid
//! reverse topological order.

mod adam;
pub mod checkpoint;
mod error;
pub mod gradcheck;
mod graph;
pub mod kernels;
mod params;
mod scalar;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use error::{Result, TensorError};
pub use graph::{Graph, Var};
pub use params::{ParamKey, ParamSet};
pub use scalar::Scalar;
pub use tensor::Tensor;

/// Clamp applied to probabilities inside binary cross-entropy.
pub const BCE_EPS: f64 = 1e-7;
