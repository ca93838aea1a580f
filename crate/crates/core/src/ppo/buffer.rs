use rand::SeedableRng;

use super::PpoError;
use crate::env::{ActionSpec, JointObservation, MultiAgentEnv, MultiDiscreteAction};
use crate::nn::{categorical::sample_action, Policy, Tensor};
use crate::SimRng;

/// One learner's transitions, time-major: row `t · num_envs + e`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AgentBuffer {
    /// `[rows, obs_dim]`
    pub obs: Vec<f64>,
    /// `[rows, n_heads]` action components.
    pub actions: Vec<usize>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub rewards: Vec<f64>,
    /// Transition `t` ended its episode.
    pub dones: Vec<bool>,
    /// Row begins a new episode; the recurrent state is zeroed before it.
    pub starts: Vec<bool>,
    /// `[rows, hidden]` recurrent state entering each row; empty for FF.
    pub hidden: Vec<f64>,
    /// Value of the observation following the last row, per lane.
    pub bootstrap: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

/// Transitions of every learning agent from one rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutBuffer {
    pub num_steps: usize,
    pub num_envs: usize,
    pub obs_dim: usize,
    pub spec: ActionSpec,
    pub hidden_dim: usize,
    pub agents: Vec<AgentBuffer>,
    /// Returns of episodes that finished during this rollout.
    pub episode_returns: Vec<f64>,
}

impl RolloutBuffer {
    pub fn rows(&self) -> usize {
        self.num_steps * self.num_envs
    }

    pub fn compute_gae(&mut self, gamma: f64, lambda: f64) {
        for a in &mut self.agents {
            let (adv, ret) = super::compute_gae(
                &a.rewards,
                &a.values,
                &a.dones,
                &a.bootstrap,
                self.num_envs,
                gamma,
                lambda,
            );
            a.advantages = adv;
            a.returns = ret;
        }
    }
}

/// Vectorized environment lanes with persistent episode state between
/// rollouts. Each lane owns its own sampling generator.
#[derive(Debug, Clone)]
pub struct RolloutCollector<E> {
    envs: Vec<E>,
    obs: Vec<JointObservation>,
    starts: Vec<bool>,
    hidden: Vec<Tensor>,
    lane_rngs: Vec<SimRng>,
    running_returns: Vec<f64>,
    n_learners: usize,
    obs_dim: usize,
    spec: ActionSpec,
}

impl<E: MultiAgentEnv> RolloutCollector<E> {
    pub fn new(mut envs: Vec<E>, policies: &[Policy], seed: u64) -> Result<Self, PpoError> {
        let first = envs
            .first()
            .ok_or_else(|| PpoError::Mismatch("at least one environment lane is required".into()))?;
        let (n_learners, obs_dim, spec) = (first.n_learners(), first.obs_dim(), first.action_spec());
        for e in &envs {
            if e.n_learners() != n_learners || e.obs_dim() != obs_dim || e.action_spec() != spec {
                return Err(PpoError::Mismatch("environment lanes disagree on shape".into()));
            }
        }
        if policies.len() != n_learners {
            return Err(PpoError::Mismatch(format!(
                "{} policies for {} learning agents",
                policies.len(),
                n_learners
            )));
        }
        for (i, p) in policies.iter().enumerate() {
            if p.obs_dim() != obs_dim || p.spec() != spec {
                return Err(PpoError::Mismatch(format!(
                    "policy {i} expects obs {} / {:?}, environment provides obs {obs_dim} / {spec:?}",
                    p.obs_dim(),
                    p.spec()
                )));
            }
        }
        let n = envs.len();
        let obs = envs.iter_mut().map(|e| e.reset()).collect();
        Ok(Self {
            envs,
            obs,
            starts: vec![true; n],
            hidden: policies.iter().map(|p| p.initial_hidden(n)).collect(),
            lane_rngs: (0..n as u64)
                .map(|lane| SimRng::seed_from_u64(seed ^ lane.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
                .collect(),
            running_returns: vec![0.0; n],
            n_learners,
            obs_dim,
            spec,
        })
    }

    pub fn num_envs(&self) -> usize {
        self.envs.len()
    }

    pub fn envs(&self) -> &[E] {
        &self.envs
    }

    fn batch_obs(&self, agent: usize) -> Tensor {
        let mut data = Vec::with_capacity(self.envs.len() * self.obs_dim);
        for o in &self.obs {
            data.extend_from_slice(&o.per_agent[agent]);
        }
        Tensor::from_vec(&[self.envs.len(), self.obs_dim], data).expect("observation batch shape")
    }

    /// Runs `num_steps` steps on every lane. Finished episodes are reset in
    /// place; the next row is flagged as an episode start.
    pub fn collect(&mut self, policies: &[Policy], num_steps: usize) -> Result<RolloutBuffer, PpoError> {
        if policies.len() != self.n_learners {
            return Err(PpoError::Mismatch(format!(
                "{} policies for {} learning agents",
                policies.len(),
                self.n_learners
            )));
        }
        let n_env = self.envs.len();
        let rows = num_steps * n_env;
        let heads = self.spec.n_heads;
        let mut agents: Vec<AgentBuffer> = policies
            .iter()
            .map(|p| AgentBuffer {
                obs: Vec::with_capacity(rows * self.obs_dim),
                actions: Vec::with_capacity(rows * heads),
                log_probs: Vec::with_capacity(rows),
                values: Vec::with_capacity(rows),
                rewards: Vec::with_capacity(rows),
                dones: Vec::with_capacity(rows),
                starts: Vec::with_capacity(rows),
                hidden: Vec::with_capacity(rows * p.hidden_dim()),
                ..AgentBuffer::default()
            })
            .collect();
        let mut episode_returns = Vec::new();
        let mut joint: Vec<Vec<MultiDiscreteAction>> = vec![Vec::with_capacity(self.n_learners); n_env];

        for _ in 0..num_steps {
            joint.iter_mut().for_each(Vec::clear);
            for (i, policy) in policies.iter().enumerate() {
                let obs = self.batch_obs(i);
                let buf = &mut agents[i];
                buf.obs.extend_from_slice(obs.data());
                buf.starts.extend_from_slice(&self.starts);
                buf.hidden.extend_from_slice(self.hidden[i].data());
                let out = policy.infer(&obs, &mut self.hidden[i], &self.starts)?;
                for e in 0..n_env {
                    let (action, log_prob, _) = sample_action(out.logits.row(e), self.spec, &mut self.lane_rngs[e])?;
                    buf.actions.extend(action.components());
                    buf.log_probs.push(log_prob);
                    buf.values.push(out.values[e]);
                    joint[e].push(action);
                }
            }
            for e in 0..n_env {
                let step = self.envs[e].step(&joint[e])?;
                self.running_returns[e] += step.reward;
                for buf in &mut agents {
                    buf.rewards.push(step.reward);
                    buf.dones.push(step.done);
                }
                if step.done {
                    episode_returns.push(self.running_returns[e]);
                    self.running_returns[e] = 0.0;
                    self.obs[e] = self.envs[e].reset();
                } else {
                    self.obs[e] = step.obs;
                }
                self.starts[e] = step.done;
            }
        }

        for (i, policy) in policies.iter().enumerate() {
            let obs = self.batch_obs(i);
            let mut h = self.hidden[i].clone();
            agents[i].bootstrap = policy.infer(&obs, &mut h, &self.starts)?.values;
        }

        Ok(RolloutBuffer {
            num_steps,
            num_envs: n_env,
            obs_dim: self.obs_dim,
            spec: self.spec,
            hidden_dim: policies.first().map_or(0, Policy::hidden_dim),
            agents,
            episode_returns,
        })
    }
}
