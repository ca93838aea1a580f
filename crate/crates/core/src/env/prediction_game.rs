use rand::SeedableRng;

use super::observation::encode_neighbours;
use super::{
    ActionSpec, EnvConfig, EnvError, HeuristicPolicy, JointObservation, MultiAgentEnv,
    MultiDiscreteAction, Step,
};
use crate::SimRng;

/// Mutable episode state.
#[derive(Debug, Clone)]
pub struct EnvState {
    pub t: usize,
    /// Own-action components of all N agents at `t - 1`.
    pub prev_joint_action: Option<Vec<usize>>,
    pub rng: SimRng,
}

/// N agents on a ring. Each observes the previous own-actions of its left
/// and right neighbours and is rewarded (jointly) for predicting every other
/// agent's current own-action.
///
/// Agents registered as heuristic partners follow a [`HeuristicPolicy`],
/// emit no predictions, and are excluded from the learner-indexed
/// observation/action vectors. Their own actions remain prediction targets.
#[derive(Debug, Clone)]
pub struct PredictionGame {
    config: EnvConfig,
    heuristics: Vec<Option<HeuristicPolicy>>,
    learners: Vec<usize>,
    state: EnvState,
}

impl PredictionGame {
    pub fn new(config: EnvConfig) -> Result<Self, EnvError> {
        Self::with_heuristics(config, &[])
    }

    /// `partners` lists `(agent_index, cycle_len)` for each scripted agent.
    pub fn with_heuristics(
        config: EnvConfig,
        partners: &[(usize, usize)],
    ) -> Result<Self, EnvError> {
        config.validate()?;
        let mut heuristics = vec![None; config.n_agents];
        for &(idx, k) in partners {
            if idx >= config.n_agents {
                return Err(EnvError::InvalidConfig(format!(
                    "heuristic agent index {idx} out of range for {} agents",
                    config.n_agents
                )));
            }
            if k == 0 {
                return Err(EnvError::InvalidConfig(
                    "heuristic cycle length must be positive".into(),
                ));
            }
            if heuristics[idx].is_some() {
                return Err(EnvError::InvalidConfig(format!(
                    "agent {idx} registered as heuristic twice"
                )));
            }
            heuristics[idx] = Some(HeuristicPolicy::new(idx, k, config.n_actions));
        }
        let learners: Vec<usize> = (0..config.n_agents)
            .filter(|&i| heuristics[i].is_none())
            .collect();
        if learners.is_empty() {
            return Err(EnvError::InvalidConfig(
                "at least one learning agent is required".into(),
            ));
        }
        let state = EnvState {
            t: 0,
            prev_joint_action: None,
            rng: SimRng::seed_from_u64(config.seed),
        };
        let mut game = Self {
            config,
            heuristics,
            learners,
            state,
        };
        game.reset_with_seed(game.config.seed);
        Ok(game)
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    /// Agent indices of the learning agents, in slot order.
    pub fn learners(&self) -> &[usize] {
        &self.learners
    }

    pub fn heuristic(&self, agent: usize) -> Option<&HeuristicPolicy> {
        self.heuristics.get(agent).and_then(Option::as_ref)
    }

    pub fn is_done(&self) -> bool {
        self.state.t >= self.config.episode_len
    }

    /// Reseeds the generator and starts a new episode.
    pub fn reset_with_seed(&mut self, seed: u64) -> JointObservation {
        self.state.rng = SimRng::seed_from_u64(seed);
        self.reset()
    }

    fn observe(&self) -> JointObservation {
        let n = self.config.n_agents;
        let a = self.config.n_actions;
        match (&self.state.prev_joint_action, self.config.is_blind()) {
            (Some(prev), false) => JointObservation {
                per_agent: self
                    .learners
                    .iter()
                    .map(|&i| encode_neighbours(prev[(i + n - 1) % n], prev[(i + 1) % n], a))
                    .collect(),
            },
            _ => JointObservation::zeros(self.learners.len(), self.config.obs_dim()),
        }
    }

    /// Shared reward: fraction of correct predictions made by the learning
    /// agents about all other agents' own actions.
    pub fn prediction_reward(&self, own: &[usize], actions: &[MultiDiscreteAction]) -> f64 {
        let n = self.config.n_agents;
        let mut correct = 0usize;
        for (slot, &i) in self.learners.iter().enumerate() {
            for (j, &target) in own.iter().enumerate() {
                if j != i && actions[slot].prediction_for(i, j) == Some(target) {
                    correct += 1;
                }
            }
        }
        correct as f64 / (self.learners.len() * (n - 1)) as f64
    }

    /// Own actions of every agent produced by the last step.
    pub fn last_own_actions(&self) -> Option<&[usize]> {
        self.state.prev_joint_action.as_deref()
    }
}

impl MultiAgentEnv for PredictionGame {
    fn n_learners(&self) -> usize {
        self.learners.len()
    }

    fn obs_dim(&self) -> usize {
        self.config.obs_dim()
    }

    fn action_spec(&self) -> ActionSpec {
        ActionSpec {
            n_heads: self.config.n_agents,
            n_actions: self.config.n_actions,
        }
    }

    fn episode_len(&self) -> usize {
        self.config.episode_len
    }

    fn reset(&mut self) -> JointObservation {
        self.state.t = 0;
        self.state.prev_joint_action = None;
        for h in self.heuristics.iter_mut().flatten() {
            h.resample_phase(&mut self.state.rng);
        }
        self.observe()
    }

    fn step(&mut self, actions: &[MultiDiscreteAction]) -> Result<Step, EnvError> {
        if self.is_done() {
            return Err(EnvError::EpisodeFinished { t: self.state.t });
        }
        if actions.len() != self.learners.len() {
            return Err(EnvError::InvalidAction(format!(
                "expected {} learner actions, got {}",
                self.learners.len(),
                actions.len()
            )));
        }
        let spec = self.action_spec();
        for a in actions {
            a.validate(spec)?;
        }
        let t = self.state.t;
        let mut slot = 0;
        let own: Vec<usize> = self
            .heuristics
            .iter()
            .map(|h| match h {
                Some(h) => h.action(t),
                None => {
                    slot += 1;
                    actions[slot - 1].own
                }
            })
            .collect();
        let reward = self.prediction_reward(&own, actions);
        self.state.prev_joint_action = Some(own);
        self.state.t += 1;
        Ok(Step {
            obs: self.observe(),
            reward,
            done: self.is_done(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::ObservationMode;

    fn cfg(mode: ObservationMode) -> EnvConfig {
        EnvConfig {
            observation: mode,
            ..EnvConfig::default()
        }
    }

    fn all_predict(own: &[usize]) -> Vec<MultiDiscreteAction> {
        (0..own.len())
            .map(|i| {
                let preds = (0..own.len()).filter(|&j| j != i).map(|j| own[j]).collect();
                MultiDiscreteAction::new(own[i], preds)
            })
            .collect()
    }

    #[test]
    fn reset_gives_zero_observations() {
        for mode in [ObservationMode::Sighted, ObservationMode::Blind] {
            let mut g = PredictionGame::new(cfg(mode)).unwrap();
            let obs = g.reset();
            assert_eq!(obs.n_agents(), 4);
            assert_eq!(obs.dim(), 8);
            assert!(obs.is_all_zero());
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = EnvConfig { n_agents: 1, ..EnvConfig::default() };
        assert!(matches!(PredictionGame::new(bad), Err(EnvError::InvalidConfig(_))));
        let bad = EnvConfig { n_actions: 1, ..EnvConfig::default() };
        assert!(PredictionGame::new(bad).is_err());
        let bad = EnvConfig { episode_len: 0, ..EnvConfig::default() };
        assert!(PredictionGame::new(bad).is_err());
        let all_scripted = [(0, 1), (1, 1), (2, 1), (3, 1)];
        assert!(PredictionGame::with_heuristics(EnvConfig::default(), &all_scripted).is_err());
    }

    #[test]
    fn reward_examples() {
        let mut g = PredictionGame::new(cfg(ObservationMode::Sighted)).unwrap();
        g.reset();
        let own = [0, 1, 2, 3];
        let s = g.step(&all_predict(&own)).unwrap();
        assert_eq!(s.reward, 1.0);

        // every prediction off by one
        let wrong: Vec<_> = all_predict(&own)
            .into_iter()
            .map(|mut a| {
                a.predictions.iter_mut().for_each(|p| *p = (*p + 1) % 4);
                a
            })
            .collect();
        assert_eq!(g.step(&wrong).unwrap().reward, 0.0);

        let mut mixed = wrong.clone();
        mixed[0] = all_predict(&own)[0].clone();
        assert_eq!(g.step(&mixed).unwrap().reward, 3.0 / 12.0);
    }

    #[test]
    fn sighted_observation_encodes_neighbour_own_actions() {
        let mut g = PredictionGame::new(cfg(ObservationMode::Sighted)).unwrap();
        g.reset();
        let own = [3, 1, 0, 2];
        let mut acts = all_predict(&own);
        // predictions must never leak into observations
        acts[1].predictions = vec![3, 3, 3];
        let s = g.step(&acts).unwrap();
        // agent 1: left = agent 0 (3), right = agent 2 (0)
        assert_eq!(s.obs.per_agent[1], encode_neighbours(3, 0, 4));
        // agent 0: left = agent 3 (2), right = agent 1 (1)
        assert_eq!(s.obs.per_agent[0], encode_neighbours(2, 1, 4));
    }

    #[test]
    fn blind_observations_stay_zero() {
        let mut g = PredictionGame::new(cfg(ObservationMode::Blind)).unwrap();
        g.reset();
        for _ in 0..10 {
            let s = g.step(&all_predict(&[1, 2, 3, 0])).unwrap();
            assert!(s.obs.is_all_zero());
        }
    }

    #[test]
    fn step_after_done_is_protocol_violation() {
        let mut g = PredictionGame::new(cfg(ObservationMode::Sighted)).unwrap();
        g.reset();
        for t in 0..10 {
            let s = g.step(&all_predict(&[0, 0, 0, 0])).unwrap();
            assert_eq!(s.done, t == 9);
        }
        assert_eq!(
            g.step(&all_predict(&[0, 0, 0, 0])),
            Err(EnvError::EpisodeFinished { t: 10 })
        );
    }

    #[test]
    fn bad_action_rejected() {
        let mut g = PredictionGame::new(cfg(ObservationMode::Sighted)).unwrap();
        g.reset();
        let mut acts = all_predict(&[0, 1, 2, 3]);
        acts[2].own = 4;
        assert!(matches!(g.step(&acts), Err(EnvError::InvalidAction(_))));
        assert!(g.step(&acts[..3]).is_err());
    }

    #[test]
    fn heuristic_phases_deterministic_per_seed() {
        let partners = [(2, 3), (3, 2)];
        let phases = |seed: u64| {
            let mut g =
                PredictionGame::with_heuristics(EnvConfig::default(), &partners).unwrap();
            (0..20)
                .map(|e| {
                    if e == 0 {
                        g.reset_with_seed(seed);
                    } else {
                        g.reset();
                    }
                    (g.heuristic(2).unwrap().phase, g.heuristic(3).unwrap().phase)
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(phases(7), phases(7));
        let p = phases(7);
        assert!(p.iter().all(|&(a, b)| a < 3 && b < 2));
        assert!(p.iter().any(|&x| x != p[0]));
    }

    #[test]
    fn heuristic_agents_follow_closed_form_and_are_targets() {
        let mut g = PredictionGame::with_heuristics(EnvConfig::default(), &[(2, 3), (3, 2)])
            .unwrap();
        assert_eq!(g.learners(), &[0, 1]);
        let obs = g.reset();
        assert_eq!(obs.n_agents(), 2);
        let h2 = g.heuristic(2).unwrap().clone();
        let h3 = g.heuristic(3).unwrap().clone();
        for t in 0..10 {
            // both learners predict the heuristics exactly and each other
            let acts = vec![
                MultiDiscreteAction::new(0, vec![1, h2.action(t), h3.action(t)]),
                MultiDiscreteAction::new(1, vec![0, h2.action(t), h3.action(t)]),
            ];
            let s = g.step(&acts).unwrap();
            assert_eq!(s.reward, 1.0);
            let own = g.last_own_actions().unwrap();
            assert_eq!(own[2], h2.action(t));
            assert_eq!(own[3], h3.action(t));
        }
    }
}
