//! Finite-difference verification of the analytic PPO loss gradient.

use rand::Rng;

use super::loss::{minibatch_loss, normalize_advantages, Minibatch};
use super::PpoConfig;
use crate::nn::categorical::head_grads;
use crate::nn::{Policy, Tensor};

/// Random minibatch of `rows` rows in `rows / steps` sequences, with old
/// log-probabilities perturbed by up to `logp_jitter` so some rows clip.
pub fn random_minibatch<R: Rng + ?Sized>(policy: &Policy, rows: usize, steps: usize, rng: &mut R, logp_jitter: f64) -> Minibatch {
    let spec = policy.spec();
    let d = policy.obs_dim();
    let obs = Tensor::from_vec(&[rows, d], (0..rows * d).map(|_| rng.random_range(-1.0..1.0)).collect())
        .expect("shape matches data");
    let actions: Vec<usize> = (0..rows * spec.n_heads).map(|_| rng.random_range(0..spec.n_actions)).collect();
    let batch = rows / steps;
    let starts: Vec<bool> = (0..rows).map(|r| r < batch || rng.random_bool(0.1)).collect();
    let h0 = policy.is_recurrent().then(|| {
        Tensor::from_vec(
            &[batch, policy.hidden_dim()],
            (0..batch * policy.hidden_dim()).map(|_| rng.random_range(-0.5..0.5)).collect(),
        )
        .expect("shape matches data")
    });
    let (out, _) = policy.forward_train(&obs, &starts, h0.as_ref(), steps).expect("consistent minibatch");
    let old_log_probs = (0..rows)
        .map(|r| {
            let comps = &actions[r * spec.n_heads..(r + 1) * spec.n_heads];
            head_grads(out.logits.row(r), comps, spec.n_actions).log_prob + rng.random_range(-logp_jitter..=logp_jitter)
        })
        .collect();
    let mut advantages: Vec<f64> = (0..rows).map(|_| rng.random_range(-2.0..2.0)).collect();
    normalize_advantages(&mut advantages);
    Minibatch {
        obs,
        actions,
        old_log_probs,
        advantages,
        returns: (0..rows).map(|_| rng.random_range(0.0..3.0)).collect(),
        starts,
        h0,
        steps,
    }
}

/// Worst relative error `|n − a| / max(|n| + |a|, 1e-6)` between the
/// analytic gradient and central differences (step 1e-5) over up to
/// `per_tensor` sampled coordinates of every parameter tensor. Parameters
/// are restored afterwards.
pub fn max_relative_error<R: Rng + ?Sized>(
    policy: &mut Policy,
    mb: &Minibatch,
    cfg: &PpoConfig,
    per_tensor: usize,
    rng: &mut R,
) -> f64 {
    let mut grads = policy.params().zeros_like();
    minibatch_loss(policy, mb, cfg, Some(&mut grads)).expect("consistent minibatch");
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for ti in 0..grads.len() {
        let len = grads[ti].len();
        for _ in 0..per_tensor.min(len) {
            let k = rng.random_range(0..len);
            let orig = policy.params().tensors()[ti].data()[k];
            let mut at = |v: f64| {
                policy.params_mut().tensors_mut()[ti].data_mut()[k] = v;
                minibatch_loss(policy, mb, cfg, None).expect("consistent minibatch").total
            };
            let numeric = (at(orig + h) - at(orig - h)) / (2.0 * h);
            policy.params_mut().tensors_mut()[ti].data_mut()[k] = orig;
            let analytic = grads[ti].data()[k];
            worst = worst.max((numeric - analytic).abs() / (numeric.abs() + analytic.abs()).max(1e-6));
        }
    }
    worst
}
