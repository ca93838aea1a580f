use rand::Rng;

use super::layers::{dense_backward, dense_forward, Activation};
use super::params::uniform_fan_in;
use super::{Gradients, NnError, ParamSet, PolicyOutput, Tensor};
use crate::env::ActionSpec;

const ACTOR_W: usize = 0;
const ACTOR_B: usize = 1;
const HEAD_W: usize = 2;
const HEAD_B: usize = 3;
const CRITIC_W: usize = 4;
const CRITIC_B: usize = 5;
const VALUE_W: usize = 6;
const VALUE_B: usize = 7;

/// Feed-forward actor-critic with separate actor and critic trunks.
///
/// Actor: `obs → hidden → n_heads × n_actions logits`.
/// Critic: `obs → hidden → 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FfPolicy {
    params: ParamSet,
    obs_dim: usize,
    hidden: usize,
    spec: ActionSpec,
    activation: Activation,
}

/// Intermediate activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct FfCache {
    rows: usize,
    x: Vec<f64>,
    actor_pre: Vec<f64>,
    actor_h: Vec<f64>,
    critic_pre: Vec<f64>,
    critic_h: Vec<f64>,
}

impl FfPolicy {
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        hidden: usize,
        spec: ActionSpec,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let n_out = spec.n_heads * spec.n_actions;
        let mut p = ParamSet::new();
        p.push("actor.fc.weight", uniform_fan_in(rng, obs_dim, hidden));
        p.push("actor.fc.bias", Tensor::zeros(&[hidden]));
        p.push("actor.head.weight", uniform_fan_in(rng, hidden, n_out));
        p.push("actor.head.bias", Tensor::zeros(&[n_out]));
        p.push("critic.fc.weight", uniform_fan_in(rng, obs_dim, hidden));
        p.push("critic.fc.bias", Tensor::zeros(&[hidden]));
        p.push("critic.head.weight", uniform_fan_in(rng, hidden, 1));
        p.push("critic.head.bias", Tensor::zeros(&[1]));
        Self {
            params: p,
            obs_dim,
            hidden,
            spec,
            activation,
        }
    }

    /// Rebuilds a policy from named tensors (e.g. a checkpoint).
    pub fn from_params(params: ParamSet, spec: ActionSpec, activation: Activation) -> Result<Self, NnError> {
        let names = [
            "actor.fc.weight",
            "actor.fc.bias",
            "actor.head.weight",
            "actor.head.bias",
            "critic.fc.weight",
            "critic.fc.bias",
            "critic.head.weight",
            "critic.head.bias",
        ];
        let mut ordered = ParamSet::new();
        for n in names {
            ordered.push(n, params.require(n)?.clone());
        }
        let w = ordered.tensors()[ACTOR_W].shape().to_vec();
        if w.len() != 2 || ordered.tensors()[HEAD_W].shape() != [w[1], spec.n_heads * spec.n_actions] {
            return Err(NnError::Shape("feed-forward tensor shapes are inconsistent".into()));
        }
        Ok(Self {
            params: ordered,
            obs_dim: w[0],
            hidden: w[1],
            spec,
            activation,
        })
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn spec(&self) -> ActionSpec {
        self.spec
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    fn check_obs(&self, obs: &Tensor) -> Result<(), NnError> {
        if obs.shape().len() != 2 || obs.cols() != self.obs_dim {
            return Err(NnError::Shape(format!(
                "expected observations [batch, {}], got {:?}",
                self.obs_dim,
                obs.shape()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, obs: &Tensor) -> Result<PolicyOutput, NnError> {
        self.forward_cached(obs).map(|(out, _)| out)
    }

    pub fn forward_cached(&self, obs: &Tensor) -> Result<(PolicyOutput, FfCache), NnError> {
        self.check_obs(obs)?;
        let rows = obs.rows();
        let t = self.params.tensors();
        let act = self.activation;

        let actor_pre = dense_forward(obs.data(), rows, &t[ACTOR_W], &t[ACTOR_B]);
        let actor_h: Vec<f64> = actor_pre.iter().map(|&v| act.apply(v)).collect();
        let logits = dense_forward(&actor_h, rows, &t[HEAD_W], &t[HEAD_B]);

        let critic_pre = dense_forward(obs.data(), rows, &t[CRITIC_W], &t[CRITIC_B]);
        let critic_h: Vec<f64> = critic_pre.iter().map(|&v| act.apply(v)).collect();
        let values = dense_forward(&critic_h, rows, &t[VALUE_W], &t[VALUE_B]);

        let out = PolicyOutput {
            logits: Tensor::from_vec(&[rows, self.spec.n_heads * self.spec.n_actions], logits)?,
            values,
        };
        let cache = FfCache {
            rows,
            x: obs.data().to_vec(),
            actor_pre,
            actor_h,
            critic_pre,
            critic_h,
        };
        Ok((out, cache))
    }

    /// Accumulates parameter gradients given upstream `dL/dlogits` and `dL/dvalue`.
    pub fn backward(&self, cache: &FfCache, d_logits: &[f64], d_values: &[f64], grads: &mut Gradients) {
        let t = self.params.tensors();
        let rows = cache.rows;
        let act = self.activation;

        let mut dh = vec![0.0; rows * self.hidden];
        {
            let (lo, hi) = grads.split_at_mut(HEAD_B);
            dense_backward(&cache.actor_h, rows, &t[HEAD_W], d_logits, &mut lo[HEAD_W], &mut hi[0], Some(&mut dh));
        }
        for ((d, &x), &y) in dh.iter_mut().zip(&cache.actor_pre).zip(&cache.actor_h) {
            *d *= act.grad(x, y);
        }
        {
            let (lo, hi) = grads.split_at_mut(ACTOR_B);
            dense_backward(&cache.x, rows, &t[ACTOR_W], &dh, &mut lo[ACTOR_W], &mut hi[0], None);
        }

        let mut dc = vec![0.0; rows * self.hidden];
        {
            let (lo, hi) = grads.split_at_mut(VALUE_B);
            dense_backward(&cache.critic_h, rows, &t[VALUE_W], d_values, &mut lo[VALUE_W], &mut hi[0], Some(&mut dc));
        }
        for ((d, &x), &y) in dc.iter_mut().zip(&cache.critic_pre).zip(&cache.critic_h) {
            *d *= act.grad(x, y);
        }
        let (lo, hi) = grads.split_at_mut(CRITIC_B);
        dense_backward(&cache.x, rows, &t[CRITIC_W], &dc, &mut lo[CRITIC_W], &mut hi[0], None);
    }
}
