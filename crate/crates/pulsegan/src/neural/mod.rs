//! Minimal differentiable building blocks with analytic backward passes:
//! 1D convolution and transposed convolution, activations, batch
//! normalization, a fully connected layer, channel concatenation, Adam,
//! and a finite-difference gradient checker.

pub mod gradcheck;
pub mod layers;
pub mod store;
pub mod tensor;

pub use gradcheck::{check_gradients, GradCheckOptions, GradCheckReport};
pub use layers::{
    concat_channels, concat_channels_backward, Activation, BatchNorm1d, Conv1d, Linear, TConv1d,
};
pub use store::{AdamConfig, Param, ParamStore};
pub use tensor::Tensor3;
