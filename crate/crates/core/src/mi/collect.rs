use std::collections::BTreeMap;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::{MiError, SampleSet, Variable};
use crate::env::{MultiAgentEnv, MultiDiscreteAction};
use crate::nn::categorical::{greedy_action, sample_action};
use crate::nn::{Policy, Tensor};
use crate::SimRng;

/// Which quantity is paired with the action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    ObsAction,
    HiddenAction,
}

impl Pairing {
    pub fn label(self) -> &'static str {
        match self {
            Pairing::ObsAction => "obs_action",
            Pairing::HiddenAction => "hidden_action",
        }
    }
}

/// How actions are chosen during recorded episodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ActionMode {
    #[default]
    Stochastic,
    Greedy,
}

/// One learner's view of one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStep {
    pub episode: usize,
    pub t: usize,
    /// Learner slot.
    pub agent: usize,
    pub obs: Vec<f64>,
    /// Action components `[own, predictions...]`.
    pub action: Vec<usize>,
    /// Recurrent state after consuming `obs`, i.e. the state that produced
    /// `action`. Empty for feed-forward policies.
    pub hidden: Vec<f64>,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub obs_dim: usize,
    pub n_heads: usize,
    pub n_actions: usize,
    pub hidden_dim: usize,
    pub steps: Vec<TrajectoryStep>,
}

impl TrajectoryLog {
    pub fn n_agents(&self) -> usize {
        self.steps.iter().map(|s| s.agent + 1).max().unwrap_or(0)
    }

    pub fn agent_steps(&self, agent: usize) -> impl Iterator<Item = &TrajectoryStep> {
        self.steps.iter().filter(move |s| s.agent == agent)
    }

    /// Undiscounted shared return of every recorded episode, in order.
    pub fn episode_returns(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for s in self.agent_steps(0) {
            if s.episode >= out.len() {
                out.resize(s.episode + 1, 0.0);
            }
            out[s.episode] += s.reward;
        }
        out
    }
}

/// Plays `n_episodes` full episodes with fixed policies, one per learner
/// slot, recording every step. Recurrent states start at zero each episode.
pub fn record_episodes<E: MultiAgentEnv>(
    policies: &[Policy],
    env: &mut E,
    n_episodes: usize,
    mode: ActionMode,
    seed: u64,
) -> Result<TrajectoryLog, MiError> {
    if policies.len() != env.n_learners() {
        return Err(MiError::Shape(format!(
            "{} policies for {} learning agents",
            policies.len(),
            env.n_learners()
        )));
    }
    let spec = env.action_spec();
    let hidden_dim = policies.first().map_or(0, Policy::hidden_dim);
    let mut rng = SimRng::seed_from_u64(seed);
    let mut steps = Vec::with_capacity(n_episodes * env.episode_len() * policies.len());
    for episode in 0..n_episodes {
        let mut obs = env.reset();
        let mut hidden: Vec<Tensor> = policies.iter().map(|p| p.initial_hidden(1)).collect();
        let mut t = 0;
        loop {
            let mut actions = Vec::with_capacity(policies.len());
            let first = steps.len();
            for (i, p) in policies.iter().enumerate() {
                let o = Tensor::from_vec(&[1, env.obs_dim()], obs.per_agent[i].clone())?;
                let out = p.infer(&o, &mut hidden[i], &[t == 0])?;
                let action = match mode {
                    ActionMode::Stochastic => sample_action(out.logits.row(0), spec, &mut rng)?.0,
                    ActionMode::Greedy => greedy_action(out.logits.row(0), spec),
                };
                steps.push(TrajectoryStep {
                    episode,
                    t,
                    agent: i,
                    obs: obs.per_agent[i].clone(),
                    action: action.components(),
                    hidden: hidden[i].data().to_vec(),
                    reward: 0.0,
                });
                actions.push(action);
            }
            let step = env.step(&actions)?;
            for s in &mut steps[first..] {
                s.reward = step.reward;
            }
            t += 1;
            if step.done {
                break;
            }
            obs = step.obs;
        }
    }
    Ok(TrajectoryLog {
        obs_dim: env.obs_dim(),
        n_heads: spec.n_heads,
        n_actions: spec.n_actions,
        hidden_dim,
        steps,
    })
}

/// Pairs one agent's observations or hidden states with its flattened
/// joint action symbol. Observation vectors are interned by exact identity.
pub fn sample_set(log: &TrajectoryLog, agent: usize, pairing: Pairing) -> Result<SampleSet, MiError> {
    let rows: Vec<&TrajectoryStep> = log.agent_steps(agent).collect();
    let y: Vec<u64> = rows
        .iter()
        .map(|s| MultiDiscreteAction::from_components(&s.action).flat_index(log.n_actions) as u64)
        .collect();
    let x = match pairing {
        Pairing::ObsAction => {
            let mut ids: BTreeMap<Vec<u64>, u64> = BTreeMap::new();
            Variable::Discrete(
                rows.iter()
                    .map(|s| {
                        let key: Vec<u64> = s.obs.iter().map(|v| v.to_bits()).collect();
                        let next = ids.len() as u64;
                        *ids.entry(key).or_insert(next)
                    })
                    .collect(),
            )
        }
        Pairing::HiddenAction => {
            if log.hidden_dim == 0 {
                return Err(MiError::UnsupportedPairing(
                    "hidden-state pairing requires a recurrent policy".into(),
                ));
            }
            Variable::Continuous {
                dim: log.hidden_dim,
                data: rows.iter().flat_map(|s| s.hidden.iter().copied()).collect(),
            }
        }
    };
    SampleSet::new(x, Variable::Discrete(y))
}

/// Records episodes and returns one sample set per learner slot.
pub fn collect_mi_samples<E: MultiAgentEnv>(
    policies: &[Policy],
    env: &mut E,
    n_episodes: usize,
    pairing: Pairing,
    seed: u64,
) -> Result<Vec<SampleSet>, MiError> {
    if pairing == Pairing::HiddenAction && policies.iter().any(|p| !p.is_recurrent()) {
        return Err(MiError::UnsupportedPairing(
            "hidden-state pairing requires a recurrent policy".into(),
        ));
    }
    let log = record_episodes(policies, env, n_episodes, ActionMode::Stochastic, seed)?;
    (0..policies.len()).map(|i| sample_set(&log, i, pairing)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvConfig, ObservationMode, PredictionGame};
    use crate::mi::mi_plugin;
    use crate::nn::{Activation, Arch, ParamSet};

    fn policies(arch: Arch, seed: u64) -> Vec<Policy> {
        let mut rng = SimRng::seed_from_u64(seed);
        let spec = crate::env::ActionSpec { n_heads: 4, n_actions: 4 };
        (0..4).map(|_| Policy::new(arch, 8, 16, spec, Activation::Relu, &mut rng)).collect()
    }

    fn game(mode: ObservationMode) -> PredictionGame {
        PredictionGame::new(EnvConfig { observation: mode, ..EnvConfig::default() }).unwrap()
    }

    #[test]
    fn sample_counts() {
        let p = policies(Arch::Rnn, 1);
        let mut env = game(ObservationMode::Sighted);
        for pairing in [Pairing::ObsAction, Pairing::HiddenAction] {
            let sets = collect_mi_samples(&p, &mut env, 1000, pairing, 0).unwrap();
            assert_eq!(sets.len(), 4);
            assert!(sets.iter().all(|s| s.n() == 10_000));
        }
    }

    #[test]
    fn blind_observations_carry_no_information() {
        let p = policies(Arch::Ff, 2);
        let mut env = game(ObservationMode::Blind);
        for s in collect_mi_samples(&p, &mut env, 100, Pairing::ObsAction, 0).unwrap() {
            let (Variable::Discrete(x), Variable::Discrete(y)) = (&s.x, &s.y) else { unreachable!() };
            assert_eq!(mi_plugin(x, y).unwrap().value, 0.0);
        }
    }

    #[test]
    fn hidden_pairing_needs_recurrence() {
        let p = policies(Arch::Ff, 3);
        let mut env = game(ObservationMode::Sighted);
        assert!(matches!(
            collect_mi_samples(&p, &mut env, 2, Pairing::HiddenAction, 0),
            Err(MiError::UnsupportedPairing(_))
        ));
    }

    /// Agent `agent` always plays its own index and predicts every other
    /// agent's index, ignoring its input.
    fn constant_policy(agent: usize) -> Policy {
        let comps: Vec<usize> = std::iter::once(agent).chain((0..4).filter(|&j| j != agent)).collect();
        let mut rng = SimRng::seed_from_u64(0);
        let spec = crate::env::ActionSpec { n_heads: 4, n_actions: 4 };
        let base = Policy::new(Arch::Ff, 8, 4, spec, Activation::Relu, &mut rng).to_checkpoint();
        let mut params = ParamSet::new();
        for (name, t) in base.iter() {
            let mut t = t.clone();
            if name.ends_with("weight") {
                t.fill(0.0);
            }
            if name == "actor.head.bias" {
                for (j, v) in t.data_mut().iter_mut().enumerate() {
                    *v = if j % 4 == comps[j / 4] { 40.0 } else { 0.0 };
                }
            }
            params.push(name, t);
        }
        Policy::from_checkpoint(params).unwrap()
    }

    #[test]
    fn constant_convention_has_no_observation_information() {
        let p: Vec<Policy> = (0..4).map(constant_policy).collect();
        let mut env = game(ObservationMode::Sighted);
        for s in collect_mi_samples(&p, &mut env, 200, Pairing::ObsAction, 0).unwrap() {
            assert!(s.estimate(3, 0).unwrap().bits() <= 0.05);
        }
        let log = record_episodes(&p, &mut env, 5, ActionMode::Greedy, 0).unwrap();
        assert_eq!(log.episode_returns(), vec![10.0; 5]);
    }

    #[test]
    fn recorded_hidden_state_matches_unroll() {
        let p = policies(Arch::Rnn, 4);
        let mut env = game(ObservationMode::Sighted);
        let log = record_episodes(&p, &mut env, 2, ActionMode::Stochastic, 9).unwrap();
        let rows: Vec<&TrajectoryStep> = log.agent_steps(2).collect();
        assert_eq!(rows.len(), 20);
        let obs = Tensor::from_vec(&[20, 8], rows.iter().flat_map(|s| s.obs.clone()).collect()).unwrap();
        let starts: Vec<bool> = rows.iter().map(|s| s.t == 0).collect();
        let Policy::Rnn(rnn) = &p[2] else { unreachable!() };
        let (_, cache, _) = rnn.unroll(&obs, &starts, &Tensor::zeros(&[1, 16]), 20).unwrap();
        for (r, s) in rows.iter().enumerate() {
            assert_eq!(&cache.hidden_states()[r * 16..(r + 1) * 16], s.hidden.as_slice());
        }
    }
}
