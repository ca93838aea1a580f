use serde::{Deserialize, Serialize};

use super::EnvError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ObservationMode {
    #[default]
    Sighted,
    Blind,
}

/// Prediction Game parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvConfig {
    pub n_agents: usize,
    pub n_actions: usize,
    pub episode_len: usize,
    pub seed: u64,
    pub observation: ObservationMode,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            n_agents: 4,
            n_actions: 4,
            episode_len: 10,
            seed: 0,
            observation: ObservationMode::Sighted,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        if self.n_agents < 2 {
            return Err(EnvError::InvalidConfig(format!(
                "n_agents must be >= 2, got {}",
                self.n_agents
            )));
        }
        if self.n_actions < 2 {
            return Err(EnvError::InvalidConfig(format!(
                "n_actions must be >= 2, got {}",
                self.n_actions
            )));
        }
        if self.episode_len < 1 {
            return Err(EnvError::InvalidConfig("episode_len must be >= 1".into()));
        }
        Ok(())
    }

    /// Dimension of one agent's observation: two one-hot neighbour actions.
    pub fn obs_dim(&self) -> usize {
        2 * self.n_actions
    }

    pub fn is_blind(&self) -> bool {
        self.observation == ObservationMode::Blind
    }
}
