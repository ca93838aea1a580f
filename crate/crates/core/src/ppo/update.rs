use rand::seq::SliceRandom;
use rand::SeedableRng;

use super::loss::{minibatch_loss, normalize_advantages, Minibatch};
use super::{AgentBuffer, PpoConfig, PpoError, RolloutBuffer};
use crate::nn::{clip_global_norm, AdamState, Policy, Tensor};
use crate::SimRng;

/// One independent learner: its policy, its optimizer, and its own shuffling
/// generator, so agents can be updated in any order or in parallel.
#[derive(Debug, Clone)]
pub struct Agent {
    pub policy: Policy,
    pub optim: AdamState,
    rng: SimRng,
}

impl Agent {
    pub fn new(policy: Policy, learning_rate: f64, seed: u64) -> Self {
        let optim = AdamState::new(policy.params().tensors(), learning_rate);
        Self {
            policy,
            optim,
            rng: SimRng::seed_from_u64(seed),
        }
    }
}

/// Means over every minibatch step of one update.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    /// Pre-clip global gradient norm.
    pub grad_norm: f64,
    pub learning_rate: f64,
}

fn gather(buf: &AgentBuffer, rollout: &RolloutBuffer, rows: &[usize], steps: usize, h0: Option<Tensor>) -> Result<Minibatch, PpoError> {
    let d = rollout.obs_dim;
    let heads = rollout.spec.n_heads;
    let mut obs = Vec::with_capacity(rows.len() * d);
    let mut actions = Vec::with_capacity(rows.len() * heads);
    for &r in rows {
        obs.extend_from_slice(&buf.obs[r * d..(r + 1) * d]);
        actions.extend_from_slice(&buf.actions[r * heads..(r + 1) * heads]);
    }
    let mut advantages: Vec<f64> = rows.iter().map(|&r| buf.advantages[r]).collect();
    normalize_advantages(&mut advantages);
    Ok(Minibatch {
        obs: Tensor::from_vec(&[rows.len(), d], obs)?,
        actions,
        old_log_probs: rows.iter().map(|&r| buf.log_probs[r]).collect(),
        advantages,
        returns: rows.iter().map(|&r| buf.returns[r]).collect(),
        starts: rows.iter().map(|&r| buf.starts[r]).collect(),
        h0,
        steps,
    })
}

/// Minibatch row sets for one epoch. Feed-forward policies shuffle rows;
/// recurrent policies shuffle env lanes and keep each lane's full sequence.
fn epoch_minibatches(
    agent: &mut Agent,
    buf: &AgentBuffer,
    rollout: &RolloutBuffer,
    cfg: &PpoConfig,
) -> Result<Vec<Minibatch>, PpoError> {
    let (steps, n_env) = (rollout.num_steps, rollout.num_envs);
    if agent.policy.is_recurrent() {
        let hd = rollout.hidden_dim;
        let mut lanes: Vec<usize> = (0..n_env).collect();
        lanes.shuffle(&mut agent.rng);
        lanes
            .chunks(n_env / cfg.num_minibatches)
            .map(|group| {
                let rows: Vec<usize> = (0..steps).flat_map(|t| group.iter().map(move |&e| t * n_env + e)).collect();
                let mut h0 = Vec::with_capacity(group.len() * hd);
                for &e in group {
                    h0.extend_from_slice(&buf.hidden[e * hd..(e + 1) * hd]);
                }
                let h0 = Tensor::from_vec(&[group.len(), hd], h0)?;
                gather(buf, rollout, &rows, steps, Some(h0))
            })
            .collect()
    } else {
        let mut rows: Vec<usize> = (0..steps * n_env).collect();
        rows.shuffle(&mut agent.rng);
        rows.chunks(rows.len() / cfg.num_minibatches)
            .map(|chunk| gather(buf, rollout, chunk, 1, None))
            .collect()
    }
}

/// `update_epochs` passes of clipped-surrogate minibatch descent on one
/// agent's slice of the rollout. Touches only `agent`.
pub fn ppo_update(
    agent: &mut Agent,
    agent_index: usize,
    rollout: &RolloutBuffer,
    cfg: &PpoConfig,
    learning_rate: f64,
    update: usize,
) -> Result<UpdateStats, PpoError> {
    let buf = &rollout.agents[agent_index];
    if buf.advantages.len() != rollout.rows() {
        return Err(PpoError::Mismatch("advantages must be computed before the update".into()));
    }
    agent.optim.learning_rate = learning_rate;
    let mut acc = UpdateStats { learning_rate, ..UpdateStats::default() };
    let mut n = 0usize;
    for _ in 0..cfg.update_epochs {
        for mb in epoch_minibatches(agent, buf, rollout, cfg)? {
            let mut grads = agent.policy.params().zeros_like();
            let stats = minibatch_loss(&agent.policy, &mb, cfg, Some(&mut grads))?;
            if !stats.total.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                return Err(PpoError::NonFinite {
                    update,
                    agent: agent_index,
                    snapshot: format!(
                        "{stats:?}; param fingerprint {:016x}; lr {learning_rate}",
                        agent.policy.params().fingerprint()
                    ),
                });
            }
            let norm = clip_global_norm(&mut grads, cfg.max_grad_norm);
            agent.optim.update(agent.policy.params_mut().tensors_mut(), &grads);
            acc.policy_loss += stats.policy_loss;
            acc.value_loss += stats.value_loss;
            acc.entropy += stats.entropy;
            acc.approx_kl += stats.approx_kl;
            acc.clip_fraction += stats.clip_fraction;
            acc.grad_norm += norm;
            n += 1;
        }
    }
    let k = 1.0 / n.max(1) as f64;
    acc.policy_loss *= k;
    acc.value_loss *= k;
    acc.entropy *= k;
    acc.approx_kl *= k;
    acc.clip_fraction *= k;
    acc.grad_norm *= k;
    Ok(acc)
}
