//! Prediction Game workbench.
//!
//! A cooperative Dec-POMDP in which agents must predict each other's actions,
//! independent PPO learners with feed-forward and recurrent policies, and
//! mutual-information diagnostics that tell grounded policies apart from
//! co-adapted conventions.
//!
//! | module | contents |
//! |---|---|
//! | [`env`] | environment contract, Prediction Game, scripted partners, blind wrapper |
//! | [`nn`] | tensors, FF/GRU actor-critics, manual gradients, Adam, checkpoints |
//! | [`ppo`] | rollouts, GAE, clipped-surrogate updates, trainer |
//! | [`mi`] | plug-in, KSG and Ross estimators, digamma, sample collection |
//! | [`harness`] | scenarios, bootstrap CIs, histograms, result tables |
//! | [`config`] | run configuration files and presets |
//! | [`selftest`] | fast oracle checks |

pub mod config;
pub mod env;
pub mod harness;
pub mod mi;
pub mod nn;
pub mod ppo;
pub mod selftest;

/// Generator used for every stochastic component.
pub type SimRng = rand_chacha::ChaCha8Rng;
