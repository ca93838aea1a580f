use serde::{Deserialize, Serialize};

use super::PpoError;
use crate::nn::Arch;

/// PPO hyperparameters. Defaults are the feed-forward column; see
/// [`PpoConfig::for_arch`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoConfig {
    /// Environment steps (not agent-steps) over the whole run.
    pub total_timesteps: u64,
    pub num_steps: usize,
    pub num_envs: usize,
    pub update_epochs: usize,
    pub num_minibatches: usize,
    pub learning_rate: f64,
    pub anneal_lr: bool,
    pub clip_eps: f64,
    pub entropy_coef: f64,
    pub vf_coef: f64,
    pub max_grad_norm: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            total_timesteps: 10_000_000,
            num_steps: 128,
            num_envs: 16,
            update_epochs: 4,
            num_minibatches: 4,
            learning_rate: 2.5e-4,
            anneal_lr: true,
            clip_eps: 0.2,
            entropy_coef: 0.01,
            vf_coef: 0.5,
            max_grad_norm: 0.5,
            gamma: 0.99,
            gae_lambda: 0.95,
        }
    }
}

impl PpoConfig {
    /// Tuned defaults for each architecture.
    pub fn for_arch(arch: Arch) -> Self {
        match arch {
            Arch::Ff => Self::default(),
            Arch::Rnn => Self {
                learning_rate: 5e-4,
                anneal_lr: false,
                ..Self::default()
            },
        }
    }

    pub fn batch_size(&self) -> usize {
        self.num_steps * self.num_envs
    }

    pub fn minibatch_size(&self) -> usize {
        self.batch_size() / self.num_minibatches
    }

    pub fn num_updates(&self) -> usize {
        (self.total_timesteps / self.batch_size().max(1) as u64) as usize
    }

    /// Learning rate applied during update `update` (0-based).
    pub fn lr_at(&self, update: usize) -> f64 {
        if self.anneal_lr {
            let progress = update as f64 / self.num_updates().max(1) as f64;
            anneal_lr(self.learning_rate, progress.min(1.0))
        } else {
            self.learning_rate
        }
    }

    pub fn validate(&self) -> Result<(), PpoError> {
        let bad = |m: String| Err(PpoError::InvalidConfig(m));
        if self.num_steps == 0 || self.num_envs == 0 {
            return bad("num_steps and num_envs must be positive".into());
        }
        if self.update_epochs == 0 || self.num_minibatches == 0 {
            return bad("update_epochs and num_minibatches must be positive".into());
        }
        if self.batch_size() % self.num_minibatches != 0 {
            return bad(format!(
                "num_envs * num_steps = {} is not divisible by num_minibatches = {}",
                self.batch_size(),
                self.num_minibatches
            ));
        }
        if self.num_updates() == 0 {
            return bad(format!(
                "total_timesteps = {} is smaller than one rollout of {} steps",
                self.total_timesteps,
                self.batch_size()
            ));
        }
        if !(self.clip_eps > 0.0) {
            return bad(format!("clip_eps must be > 0, got {}", self.clip_eps));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad(format!("gae_lambda must lie in [0, 1], got {}", self.gae_lambda));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(self.max_grad_norm > 0.0) {
            return bad(format!("max_grad_norm must be > 0, got {}", self.max_grad_norm));
        }
        for (name, v) in [("entropy_coef", self.entropy_coef), ("vf_coef", self.vf_coef)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a finite non-negative number, got {v}"));
            }
        }
        Ok(())
    }

    /// Additional constraints for recurrent minibatching: whole env lanes
    /// are grouped, so lanes must split evenly.
    pub fn validate_for(&self, arch: Arch) -> Result<(), PpoError> {
        self.validate()?;
        if arch == Arch::Rnn && self.num_envs % self.num_minibatches != 0 {
            return Err(PpoError::InvalidConfig(format!(
                "recurrent training needs num_envs = {} divisible by num_minibatches = {}",
                self.num_envs, self.num_minibatches
            )));
        }
        Ok(())
    }
}

/// Linear decay `base · (1 − progress)`.
pub fn anneal_lr(base_lr: f64, progress: f64) -> f64 {
    base_lr * (1.0 - progress)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_defaults() {
        let ff = PpoConfig::for_arch(Arch::Ff);
        let rnn = PpoConfig::for_arch(Arch::Rnn);
        assert_eq!(ff.learning_rate, 2.5e-4);
        assert!(ff.anneal_lr);
        assert_eq!(rnn.learning_rate, 5e-4);
        assert!(!rnn.anneal_lr);
        for c in [ff, rnn] {
            assert_eq!(c.total_timesteps, 10_000_000);
            assert_eq!((c.num_steps, c.num_envs), (128, 16));
            assert_eq!((c.update_epochs, c.num_minibatches), (4, 4));
            assert_eq!((c.clip_eps, c.entropy_coef, c.vf_coef, c.max_grad_norm), (0.2, 0.01, 0.5, 0.5));
            assert_eq!((c.gamma, c.gae_lambda), (0.99, 0.95));
            assert_eq!(c.batch_size(), 2048);
            assert_eq!(c.minibatch_size(), 512);
            c.validate_for(Arch::Rnn).unwrap();
        }
    }

    #[test]
    fn anneal_examples() {
        assert_eq!(anneal_lr(1e-3, 0.0), 1e-3);
        assert_eq!(anneal_lr(1e-3, 1.0), 0.0);
        assert_eq!(anneal_lr(1e-3, 0.5), 5e-4);
        let c = PpoConfig { total_timesteps: 2048 * 4, ..PpoConfig::default() };
        assert_eq!(c.lr_at(0), c.learning_rate);
        assert_eq!(c.lr_at(2), c.learning_rate / 2.0);
        let flat = PpoConfig { anneal_lr: false, ..c };
        assert_eq!(flat.lr_at(3), flat.learning_rate);
    }

    #[test]
    fn invalid_configs() {
        let c = PpoConfig::default();
        assert!(PpoConfig { num_minibatches: 3, ..c.clone() }.validate().is_err());
        assert!(PpoConfig { clip_eps: 0.0, ..c.clone() }.validate().is_err());
        assert!(PpoConfig { gamma: 1.5, ..c.clone() }.validate().is_err());
        assert!(PpoConfig { gae_lambda: -0.1, ..c.clone() }.validate().is_err());
        assert!(PpoConfig { total_timesteps: 100, ..c.clone() }.validate().is_err());
        let uneven_lanes = PpoConfig { num_envs: 6, num_minibatches: 4, ..c };
        uneven_lanes.validate().unwrap();
        assert!(uneven_lanes.validate_for(Arch::Rnn).is_err());
    }
}
