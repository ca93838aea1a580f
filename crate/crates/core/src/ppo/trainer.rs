use std::io::Write;

use rayon::prelude::*;

use super::{ppo_update, Agent, PpoConfig, PpoError, RolloutCollector, UpdateStats};
use crate::env::MultiAgentEnv;
use crate::nn::Policy;

/// Summary of one rollout-plus-update cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateMetrics {
    pub update: usize,
    /// Cumulative environment steps after this update.
    pub env_steps: u64,
    /// Mean return of episodes finished during the rollout (shared by all
    /// agents); NaN if none finished.
    pub mean_return: f64,
    pub episodes: usize,
    pub agents: Vec<UpdateStats>,
}

/// Independent PPO over a set of environment lanes.
pub struct Trainer<E> {
    cfg: PpoConfig,
    agents: Vec<Agent>,
    collector: RolloutCollector<E>,
    update: usize,
    parallel_agents: bool,
}

impl<E: MultiAgentEnv> Trainer<E> {
    /// `envs.len()` must equal `cfg.num_envs`; one policy per learner slot.
    pub fn new(envs: Vec<E>, policies: Vec<Policy>, cfg: PpoConfig, seed: u64) -> Result<Self, PpoError> {
        for p in &policies {
            cfg.validate_for(p.arch())?;
        }
        if envs.len() != cfg.num_envs {
            return Err(PpoError::Mismatch(format!(
                "{} environment lanes for num_envs = {}",
                envs.len(),
                cfg.num_envs
            )));
        }
        let collector = RolloutCollector::new(envs, &policies, seed)?;
        let agents = policies
            .into_iter()
            .enumerate()
            .map(|(i, p)| Agent::new(p, cfg.learning_rate, seed.wrapping_add(1 + i as u64).wrapping_mul(0xD134_2543_DE82_EF95)))
            .collect();
        Ok(Self {
            cfg,
            agents,
            collector,
            update: 0,
            parallel_agents: false,
        })
    }

    /// Updates distinct agents on separate threads. Results are identical
    /// to the sequential mode.
    pub fn with_parallel_agents(mut self, on: bool) -> Self {
        self.parallel_agents = on;
        self
    }

    pub fn config(&self) -> &PpoConfig {
        &self.cfg
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn policies(&self) -> Vec<&Policy> {
        self.agents.iter().map(|a| &a.policy).collect()
    }

    pub fn into_policies(self) -> Vec<Policy> {
        self.agents.into_iter().map(|a| a.policy).collect()
    }

    pub fn updates_done(&self) -> usize {
        self.update
    }

    pub fn num_updates(&self) -> usize {
        self.cfg.num_updates()
    }

    pub fn is_finished(&self) -> bool {
        self.update >= self.num_updates()
    }

    /// Collects one rollout and updates every agent on it.
    pub fn step(&mut self) -> Result<UpdateMetrics, PpoError> {
        let policies: Vec<Policy> = self.agents.iter().map(|a| a.policy.clone()).collect();
        let mut rollout = self.collector.collect(&policies, self.cfg.num_steps)?;
        drop(policies);
        rollout.compute_gae(self.cfg.gamma, self.cfg.gae_lambda);
        let lr = self.cfg.lr_at(self.update);
        let (cfg, update) = (&self.cfg, self.update);
        let stats: Vec<UpdateStats> = if self.parallel_agents {
            self.agents
                .par_iter_mut()
                .enumerate()
                .map(|(i, a)| ppo_update(a, i, &rollout, cfg, lr, update))
                .collect::<Result<_, _>>()?
        } else {
            self.agents
                .iter_mut()
                .enumerate()
                .map(|(i, a)| ppo_update(a, i, &rollout, cfg, lr, update))
                .collect::<Result<_, _>>()?
        };
        self.update += 1;
        let episodes = rollout.episode_returns.len();
        let mean_return = if episodes == 0 {
            f64::NAN
        } else {
            rollout.episode_returns.iter().sum::<f64>() / episodes as f64
        };
        Ok(UpdateMetrics {
            update: self.update,
            env_steps: (self.update * self.cfg.batch_size()) as u64,
            mean_return,
            episodes,
            agents: stats,
        })
    }

    /// Runs the remaining updates, reporting each to `on_update`.
    pub fn train(&mut self, mut on_update: impl FnMut(&UpdateMetrics, &Self) -> Result<(), PpoError>) -> Result<(), PpoError> {
        while !self.is_finished() {
            let m = self.step()?;
            on_update(&m, self)?;
        }
        Ok(())
    }
}

/// CSV metrics stream, one row per update.
pub struct MetricsWriter<W: Write> {
    inner: csv::Writer<W>,
    n_agents: usize,
}

impl<W: Write> MetricsWriter<W> {
    pub fn new(out: W, n_agents: usize) -> Result<Self, PpoError> {
        let mut inner = csv::Writer::from_writer(out);
        let mut header = vec!["update".to_string(), "env_steps".into(), "mean_return".into()];
        for i in 0..n_agents {
            for col in ["policy_loss", "value_loss", "entropy", "grad_norm"] {
                header.push(format!("agent{i}_{col}"));
            }
        }
        header.push("lr".into());
        inner.write_record(&header).map_err(|e| PpoError::Metrics(e.to_string()))?;
        Ok(Self { inner, n_agents })
    }

    pub fn write(&mut self, m: &UpdateMetrics) -> Result<(), PpoError> {
        if m.agents.len() != self.n_agents {
            return Err(PpoError::Metrics(format!("expected {} agents, got {}", self.n_agents, m.agents.len())));
        }
        let mut rec = vec![m.update.to_string(), m.env_steps.to_string(), m.mean_return.to_string()];
        for a in &m.agents {
            rec.extend([a.policy_loss, a.value_loss, a.entropy, a.grad_norm].map(|v| v.to_string()));
        }
        rec.push(m.agents.first().map_or(0.0, |a| a.learning_rate).to_string());
        self.inner.write_record(&rec).map_err(|e| PpoError::Metrics(e.to_string()))?;
        self.inner.flush().map_err(|e| PpoError::Metrics(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvConfig, PredictionGame, TwoArmedBandit};
    use crate::nn::{categorical::softmax, Activation, Arch, Tensor};
    use crate::SimRng;
    use rand::SeedableRng;

    fn game_trainer(arch: Arch, cfg: PpoConfig, seed: u64) -> Trainer<PredictionGame> {
        let envs: Vec<_> = (0..cfg.num_envs)
            .map(|e| PredictionGame::new(EnvConfig { seed: seed * 1000 + e as u64, ..EnvConfig::default() }).unwrap())
            .collect();
        let mut rng = SimRng::seed_from_u64(seed);
        let policies = (0..4)
            .map(|_| Policy::new(arch, 8, 16, envs[0].action_spec(), Activation::Relu, &mut rng))
            .collect();
        Trainer::new(envs, policies, cfg, seed).unwrap()
    }

    fn small_cfg() -> PpoConfig {
        PpoConfig {
            total_timesteps: 4 * 32 * 4,
            num_steps: 32,
            num_envs: 4,
            num_minibatches: 2,
            update_epochs: 2,
            ..PpoConfig::default()
        }
    }

    #[test]
    fn bandit_learns_the_paying_arm() {
        for seed in 0..3 {
            let cfg = PpoConfig {
                total_timesteps: 50_000,
                num_steps: 64,
                num_envs: 8,
                learning_rate: 3e-3,
                ..PpoConfig::default()
            };
            let envs = vec![TwoArmedBandit::new(); cfg.num_envs];
            let mut rng = SimRng::seed_from_u64(seed);
            let spec = envs[0].action_spec();
            let policy = Policy::new(Arch::Ff, 1, 16, spec, Activation::Relu, &mut rng);
            let mut t = Trainer::new(envs, vec![policy], cfg, seed).unwrap();
            t.train(|_, _| Ok(())).unwrap();
            let obs = Tensor::from_vec(&[1, 1], vec![1.0]).unwrap();
            let out = t.policies()[0].infer(&obs, &mut Tensor::zeros(&[1, 0]), &[true]).unwrap();
            let p0 = softmax(out.logits.row(0))[0];
            assert!(p0 >= 0.95, "seed {seed}: P(arm 0) = {p0}");
        }
    }

    #[test]
    fn updates_touch_only_their_own_agent() {
        let mut t = game_trainer(Arch::Ff, small_cfg(), 3);
        let policies: Vec<Policy> = t.agents.iter().map(|a| a.policy.clone()).collect();
        let mut rollout = t.collector.collect(&policies, 32).unwrap();
        rollout.compute_gae(0.99, 0.95);
        let before: Vec<u64> = t.agents.iter().map(|a| a.policy.params().fingerprint()).collect();
        let cfg = t.cfg.clone();
        ppo_update(&mut t.agents[1], 1, &rollout, &cfg, 1e-3, 0).unwrap();
        let after: Vec<u64> = t.agents.iter().map(|a| a.policy.params().fingerprint()).collect();
        for i in 0..4 {
            assert_eq!(before[i] == after[i], i != 1, "agent {i}");
        }
    }

    #[test]
    fn training_is_deterministic_and_parallel_mode_matches() {
        for arch in [Arch::Ff, Arch::Rnn] {
            let run = |parallel: bool| {
                let mut t = game_trainer(arch, small_cfg(), 7).with_parallel_agents(parallel);
                let mut log = Vec::new();
                t.train(|m, _| {
                    log.push(m.clone());
                    Ok(())
                })
                .unwrap();
                let fp: Vec<u64> = t.policies().iter().map(|p| p.params().fingerprint()).collect();
                (log, fp)
            };
            let a = run(false);
            assert_eq!(a.0.len(), 4);
            assert_eq!(a, run(false));
            assert_eq!(a, run(true));
        }
    }

    #[test]
    fn large_entropy_bonus_drives_heads_to_uniform() {
        let cfg = PpoConfig {
            entropy_coef: 10.0,
            learning_rate: 3e-3,
            anneal_lr: false,
            total_timesteps: 16 * 32 * 4,
            ..small_cfg()
        };
        let mut t = game_trainer(Arch::Ff, cfg, 4);
        t.train(|_, _| Ok(())).unwrap();
        let mut rng = SimRng::seed_from_u64(0);
        use rand::Rng;
        for p in t.policies() {
            let obs: Vec<f64> = (0..8).map(|_| if rng.random_bool(0.25) { 1.0 } else { 0.0 }).collect();
            let out = p.forward_train(&Tensor::from_vec(&[1, 8], obs).unwrap(), &[true], None, 1).unwrap().0;
            for head in out.logits.row(0).chunks(4) {
                let probs = softmax(head);
                let h: f64 = -probs.iter().map(|q| q * q.ln()).sum::<f64>();
                assert!(h >= 0.95 * 4f64.ln(), "head entropy {h}");
            }
        }
    }

    #[test]
    fn metrics_csv_has_one_row_per_update() {
        let mut t = game_trainer(Arch::Ff, small_cfg(), 5);
        let mut out = Vec::new();
        {
            let mut w = MetricsWriter::new(&mut out, 4).unwrap();
            t.train(|m, _| w.write(m)).unwrap();
        }
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[0].starts_with("update,env_steps,mean_return,agent0_policy_loss"));
        assert!(lines[0].ends_with(",lr"));
        assert!(lines[4].starts_with("4,512,"));
    }
}
