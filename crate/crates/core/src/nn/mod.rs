//! Deterministic actor-critic kernel: dense layers, a gated recurrent cell,
//! categorical heads, hand-written reverse-mode gradients, and Adam.

mod adam;
pub mod categorical;
mod checkpoint;
mod ff;
mod layers;
mod params;
mod policy;
mod rnn;
mod tensor;

pub use adam::AdamState;
pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, write_checkpoint,
};
pub use ff::{FfCache, FfPolicy};
pub use layers::Activation;
pub use params::{clip_global_norm, global_norm, uniform_fan_in, Gradients, ParamSet};
pub use policy::{Arch, Policy, PolicyCache, PolicyOutput};
pub use rnn::{RnnCache, RnnPolicy};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
