//! Independent PPO: one actor-critic and one optimizer per learning agent,
//! no parameter sharing, trained concurrently on the shared reward.

mod buffer;
mod config;
mod gae;
pub mod gradcheck;
mod loss;
mod trainer;
mod update;

pub use buffer::{AgentBuffer, RolloutBuffer, RolloutCollector};
pub use config::{anneal_lr, PpoConfig};
pub use gae::compute_gae;
pub use loss::{clipped_surrogate, minibatch_loss, normalize_advantages, LossStats, Minibatch};
pub use trainer::{MetricsWriter, Trainer, UpdateMetrics};
pub use update::{ppo_update, Agent, UpdateStats};

use thiserror::Error;

use crate::env::EnvError;
use crate::nn::NnError;

#[derive(Debug, Error)]
pub enum PpoError {
    #[error("invalid PPO configuration: {0}")]
    InvalidConfig(String),
    #[error("agent/environment mismatch: {0}")]
    Mismatch(String),
    #[error("non-finite loss at update {update}, agent {agent}: {snapshot}")]
    NonFinite {
        update: usize,
        agent: usize,
        snapshot: String,
    },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("metrics output: {0}")]
    Metrics(String),
}
