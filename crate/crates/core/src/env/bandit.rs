use super::{ActionSpec, EnvError, JointObservation, MultiAgentEnv, MultiDiscreteAction, Step};

/// Single-agent, single-step bandit: arm 0 pays 1, arm 1 pays 0.
///
/// Used as an analytic sanity target for the policy-gradient learner.
#[derive(Debug, Clone, Default)]
pub struct TwoArmedBandit {
    done: bool,
}

impl TwoArmedBandit {
    pub fn new() -> Self {
        Self::default()
    }
}

impl MultiAgentEnv for TwoArmedBandit {
    fn n_learners(&self) -> usize {
        1
    }

    fn obs_dim(&self) -> usize {
        1
    }

    fn action_spec(&self) -> ActionSpec {
        ActionSpec { n_heads: 1, n_actions: 2 }
    }

    fn episode_len(&self) -> usize {
        1
    }

    fn reset(&mut self) -> JointObservation {
        self.done = false;
        JointObservation { per_agent: vec![vec![1.0]] }
    }

    fn step(&mut self, actions: &[MultiDiscreteAction]) -> Result<Step, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeFinished { t: 1 });
        }
        if actions.len() != 1 {
            return Err(EnvError::InvalidAction("bandit takes exactly one action".into()));
        }
        actions[0].validate(self.action_spec())?;
        self.done = true;
        Ok(Step {
            obs: JointObservation { per_agent: vec![vec![1.0]] },
            reward: if actions[0].own == 0 { 1.0 } else { 0.0 },
            done: true,
        })
    }
}
