//! Minimal numerical core: tensors, the network's layer set with explicit
//! backward passes, and the AmsGrad optimizer.

mod activation;
mod amsgrad;
mod conv;
mod dropout;
pub mod gradcheck;
mod pool;
mod tensor;

pub use activation::{leaky_relu, leaky_relu_backward, LEAKY_SLOPE};
pub use amsgrad::{AmsGradConfig, AmsGradState};
pub use conv::{conv1d, conv1d_backward, ConvGrads, ConvSpec};
pub use dropout::{dropout, dropout_backward};
pub use pool::{
    global_pool1d, global_pool1d_backward, pool1d, pool1d_backward, upsample_nearest,
    upsample_nearest_backward, PoolKind,
};
pub use tensor::{Scalar, Tensor};
