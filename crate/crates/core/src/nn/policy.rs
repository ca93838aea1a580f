use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Activation, FfCache, FfPolicy, Gradients, NnError, ParamSet, RnnCache, RnnPolicy, Tensor};
use crate::env::ActionSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    #[default]
    Ff,
    Rnn,
}

impl Arch {
    pub fn label(self) -> &'static str {
        match self {
            Arch::Ff => "ff",
            Arch::Rnn => "rnn",
        }
    }
}

impl std::fmt::Display for Arch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Arch::Ff => "FF",
            Arch::Rnn => "RNN",
        })
    }
}

/// Batched network output: fused head logits `[rows, n_heads · n_actions]`
/// and one value per row.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutput {
    pub logits: Tensor,
    pub values: Vec<f64>,
}

/// Activations recorded by [`Policy::forward_train`].
#[derive(Debug, Clone)]
pub enum PolicyCache {
    Ff(FfCache),
    Rnn(RnnCache),
}

/// Either actor-critic architecture behind one interface.
#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    Ff(FfPolicy),
    Rnn(RnnPolicy),
}

impl Policy {
    pub fn new<R: Rng + ?Sized>(
        arch: Arch,
        obs_dim: usize,
        hidden: usize,
        spec: ActionSpec,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        match arch {
            Arch::Ff => Policy::Ff(FfPolicy::new(obs_dim, hidden, spec, activation, rng)),
            Arch::Rnn => Policy::Rnn(RnnPolicy::new(obs_dim, hidden, hidden, spec, activation, rng)),
        }
    }

    pub fn arch(&self) -> Arch {
        match self {
            Policy::Ff(_) => Arch::Ff,
            Policy::Rnn(_) => Arch::Rnn,
        }
    }

    pub fn params(&self) -> &ParamSet {
        match self {
            Policy::Ff(p) => p.params(),
            Policy::Rnn(p) => p.params(),
        }
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        match self {
            Policy::Ff(p) => p.params_mut(),
            Policy::Rnn(p) => p.params_mut(),
        }
    }

    pub fn spec(&self) -> ActionSpec {
        match self {
            Policy::Ff(p) => p.spec(),
            Policy::Rnn(p) => p.spec(),
        }
    }

    pub fn obs_dim(&self) -> usize {
        match self {
            Policy::Ff(p) => p.obs_dim(),
            Policy::Rnn(p) => p.obs_dim(),
        }
    }

    /// Recurrent state width; zero for feed-forward policies.
    pub fn hidden_dim(&self) -> usize {
        match self {
            Policy::Ff(_) => 0,
            Policy::Rnn(p) => p.hidden(),
        }
    }

    pub fn is_recurrent(&self) -> bool {
        matches!(self, Policy::Rnn(_))
    }

    pub fn activation(&self) -> Activation {
        match self {
            Policy::Ff(p) => p.activation(),
            Policy::Rnn(p) => p.activation(),
        }
    }

    pub fn initial_hidden(&self, batch: usize) -> Tensor {
        Tensor::zeros(&[batch, self.hidden_dim()])
    }

    /// Batched inference. For recurrent policies `hidden` is advanced in
    /// place; rows flagged in `starts` are reset first.
    pub fn infer(&self, obs: &Tensor, hidden: &mut Tensor, starts: &[bool]) -> Result<PolicyOutput, NnError> {
        match self {
            Policy::Ff(p) => p.forward(obs),
            Policy::Rnn(p) => {
                let (out, h) = p.step(obs, hidden, starts)?;
                *hidden = h;
                Ok(out)
            }
        }
    }

    /// Differentiable forward pass over time-major rows `[steps · batch, obs_dim]`.
    ///
    /// Feed-forward policies ignore `starts`, `h0` and `steps`. Recurrent
    /// policies require `h0: [batch, hidden]`.
    pub fn forward_train(
        &self,
        obs: &Tensor,
        starts: &[bool],
        h0: Option<&Tensor>,
        steps: usize,
    ) -> Result<(PolicyOutput, PolicyCache), NnError> {
        match self {
            Policy::Ff(p) => p.forward_cached(obs).map(|(o, c)| (o, PolicyCache::Ff(c))),
            Policy::Rnn(p) => {
                let h0 = h0.ok_or_else(|| NnError::Shape("recurrent forward requires an initial state".into()))?;
                p.unroll(obs, starts, h0, steps).map(|(o, c, _)| (o, PolicyCache::Rnn(c)))
            }
        }
    }

    /// Accumulates parameter gradients into `grads`.
    pub fn backward(&self, cache: &PolicyCache, d_logits: &[f64], d_values: &[f64], grads: &mut Gradients) -> Result<(), NnError> {
        match (self, cache) {
            (Policy::Ff(p), PolicyCache::Ff(c)) => p.backward(c, d_logits, d_values, grads),
            (Policy::Rnn(p), PolicyCache::Rnn(c)) => p.backward(c, d_logits, d_values, grads),
            _ => return Err(NnError::Shape("cache does not match policy architecture".into())),
        }
        Ok(())
    }

    /// Parameters plus the metadata needed to rebuild the policy.
    pub fn to_checkpoint(&self) -> ParamSet {
        let mut p = self.params().clone();
        let spec = self.spec();
        p.push(
            "meta.action_spec",
            Tensor::from_vec(&[2], vec![spec.n_heads as f64, spec.n_actions as f64]).unwrap(),
        );
        p.push(
            "meta.activation",
            Tensor::from_vec(&[1], vec![self.activation().code()]).unwrap(),
        );
        p
    }

    pub fn from_checkpoint(params: ParamSet) -> Result<Self, NnError> {
        let spec = params.require("meta.action_spec")?.data().to_vec();
        if spec.len() != 2 {
            return Err(NnError::Checkpoint("malformed meta.action_spec".into()));
        }
        let spec = ActionSpec {
            n_heads: spec[0] as usize,
            n_actions: spec[1] as usize,
        };
        let activation = params
            .require("meta.activation")?
            .data()
            .first()
            .and_then(|&c| Activation::from_code(c))
            .ok_or_else(|| NnError::Checkpoint("unknown activation code".into()))?;
        if params.get("gru.hidden.weight").is_some() {
            Ok(Policy::Rnn(RnnPolicy::from_params(params, spec, activation)?))
        } else {
            Ok(Policy::Ff(FfPolicy::from_params(params, spec, activation)?))
        }
    }
}
