//! The motion, skeleton and view encoders, the shared decoder, parameter
//! initialization and checkpoints.

mod checkpoint;
mod config;
mod model;

pub use checkpoint::{Checkpoint, CHECKPOINT_KIND};
pub use config::{ArchConfig, StaticStage};
pub use model::{
    decode, decode_backward, decode_with_cache, encode, encode_backward, encode_with_cache, fuse_codes, init_bound,
    motion_code_len, CodeGrads, DecodeCache, EncodeCache, Gradients, LatentCodes, ModelParams, ParamMap,
};
