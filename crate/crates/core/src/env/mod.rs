//! Dec-POMDP environment contract and the Prediction Game.
//!
//! The [`MultiAgentEnv`] trait is the step/reset surface consumed by the
//! trainer and the evaluation harness. [`PredictionGame`] is the cooperative
//! ring game where every agent emits its own action plus a prediction of
//! every other agent's action, and the shared reward is prediction accuracy.

mod action;
mod bandit;
mod config;
mod heuristic;
mod observation;
mod prediction_game;

pub use action::{ActionSpec, MultiDiscreteAction};
pub use bandit::TwoArmedBandit;
pub use config::{EnvConfig, ObservationMode};
pub use heuristic::HeuristicPolicy;
pub use observation::{apply_blind, JointObservation};
pub use prediction_game::{EnvState, PredictionGame};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("invalid environment configuration: {0}")]
    InvalidConfig(String),
    #[error("step called on a finished episode (t = {t})")]
    EpisodeFinished { t: usize },
    #[error("invalid action: {0}")]
    InvalidAction(String),
}

/// Outcome of a single environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub obs: JointObservation,
    pub reward: f64,
    pub done: bool,
}

/// Cooperative multi-agent environment with a shared scalar reward.
///
/// Only the learning agents are addressed through this trait: observations
/// and actions are indexed by learner slot, in increasing agent-index order.
/// Scripted agents, if any, are driven internally by the environment.
pub trait MultiAgentEnv {
    fn n_learners(&self) -> usize;
    fn obs_dim(&self) -> usize;
    fn action_spec(&self) -> ActionSpec;
    fn episode_len(&self) -> usize;
    fn reset(&mut self) -> JointObservation;
    fn step(&mut self, actions: &[MultiDiscreteAction]) -> Result<Step, EnvError>;
}
