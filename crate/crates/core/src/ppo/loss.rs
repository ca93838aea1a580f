use super::{PpoConfig, PpoError};
use crate::nn::categorical::head_grads;
use crate::nn::{Gradients, Policy, Tensor};

/// Training rows for one gradient step. Rows are time-major
/// (`t · batch + b`) when `steps > 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Minibatch {
    pub obs: Tensor,
    /// `[rows, n_heads]`
    pub actions: Vec<usize>,
    pub old_log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    pub starts: Vec<bool>,
    /// Recurrent state entering the first time step; `None` for FF.
    pub h0: Option<Tensor>,
    pub steps: usize,
}

impl Minibatch {
    pub fn rows(&self) -> usize {
        self.old_log_probs.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossStats {
    pub total: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    /// Mean joint entropy (summed over heads).
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

/// In-place standardization to mean 0, std 1 (population std, `ε = 1e-8`).
pub fn normalize_advantages(adv: &mut [f64]) {
    let n = adv.len() as f64;
    if adv.is_empty() {
        return;
    }
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    for a in adv.iter_mut() {
        *a = (*a - mean) / (std + 1e-8);
    }
}

/// `min(ρ·Â, clip(ρ, 1 − ε, 1 + ε)·Â)`.
pub fn clipped_surrogate(ratio: f64, advantage: f64, clip_eps: f64) -> f64 {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - clip_eps, 1.0 + clip_eps) * advantage;
    unclipped.min(clipped)
}

/// PPO loss on one minibatch:
/// `−mean(min(ρÂ, clip(ρ)Â)) + vf_coef·mean((V − target)²) − entropy_coef·mean(H)`.
///
/// When `grads` is given, parameter gradients are accumulated into it.
pub fn minibatch_loss(
    policy: &Policy,
    mb: &Minibatch,
    cfg: &PpoConfig,
    grads: Option<&mut Gradients>,
) -> Result<LossStats, PpoError> {
    let rows = mb.rows();
    let spec = policy.spec();
    let width = spec.n_heads * spec.n_actions;
    let (out, cache) = policy.forward_train(&mb.obs, &mb.starts, mb.h0.as_ref(), mb.steps)?;
    let inv = 1.0 / rows as f64;
    let mut stats = LossStats::default();
    let mut d_logits = vec![0.0; rows * width];
    let mut d_values = vec![0.0; rows];

    for r in 0..rows {
        let comps = &mb.actions[r * spec.n_heads..(r + 1) * spec.n_heads];
        let hg = head_grads(out.logits.row(r), comps, spec.n_actions);
        let log_ratio = hg.log_prob - mb.old_log_probs[r];
        let ratio = log_ratio.exp();
        let adv = mb.advantages[r];
        let unclipped = ratio * adv;
        let surrogate = clipped_surrogate(ratio, adv, cfg.clip_eps);
        stats.policy_loss -= surrogate * inv;
        stats.entropy += hg.entropy * inv;
        stats.approx_kl += ((ratio - 1.0) - log_ratio) * inv;
        if (ratio - 1.0).abs() > cfg.clip_eps {
            stats.clip_fraction += inv;
        }
        let err = out.values[r] - mb.returns[r];
        stats.value_loss += err * err * inv;

        // the clipped branch is constant in the parameters
        let d_logp = if unclipped <= surrogate { -ratio * adv * inv } else { 0.0 };
        let d_ent = -cfg.entropy_coef * inv;
        let row = &mut d_logits[r * width..(r + 1) * width];
        for ((d, &gl), &ge) in row.iter_mut().zip(&hg.d_log_prob).zip(&hg.d_entropy) {
            *d = d_logp * gl + d_ent * ge;
        }
        d_values[r] = 2.0 * cfg.vf_coef * err * inv;
    }
    stats.total = stats.policy_loss + cfg.vf_coef * stats.value_loss - cfg.entropy_coef * stats.entropy;
    if let Some(g) = grads {
        policy.backward(&cache, &d_logits, &d_values, g)?;
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::ActionSpec;
    use crate::ppo::gradcheck::{max_relative_error, random_minibatch};
    use crate::nn::{Activation, Arch};
    use crate::SimRng;
    use proptest::prelude::*;
    use rand::SeedableRng;

    const SPEC: ActionSpec = ActionSpec { n_heads: 3, n_actions: 4 };

    fn random_batch(policy: &Policy, rows: usize, steps: usize, rng: &mut SimRng, logp_jitter: f64) -> Minibatch {
        random_minibatch(policy, rows, steps, rng, logp_jitter)
    }

    fn worst_gradient_error(policy: &mut Policy, mb: &Minibatch, cfg: &PpoConfig, rng: &mut SimRng) -> f64 {
        max_relative_error(policy, mb, cfg, 12, rng)
    }

    #[test]
    fn ff_loss_gradient_matches_finite_differences() {
        let mut rng = SimRng::seed_from_u64(11);
        for act in [Activation::Relu, Activation::Tanh] {
            let mut p = Policy::new(Arch::Ff, 5, 16, SPEC, act, &mut rng);
            let mb = random_batch(&p, 24, 1, &mut rng, 0.1);
            let worst = worst_gradient_error(&mut p, &mb, &PpoConfig::default(), &mut rng);
            assert!(worst <= 1e-4, "{act:?}: relative error {worst}");
        }
    }

    #[test]
    fn rnn_loss_gradient_matches_finite_differences() {
        let mut rng = SimRng::seed_from_u64(12);
        for act in [Activation::Relu, Activation::Tanh] {
            let mut p = Policy::new(Arch::Rnn, 5, 12, SPEC, act, &mut rng);
            let mb = random_batch(&p, 8 * 3, 8, &mut rng, 0.1);
            let worst = worst_gradient_error(&mut p, &mb, &PpoConfig::default(), &mut rng);
            assert!(worst <= 1e-4, "{act:?}: relative error {worst}");
        }
    }

    #[test]
    fn ratio_identity_gives_vanilla_policy_gradient() {
        let mut rng = SimRng::seed_from_u64(13);
        let mut p = Policy::new(Arch::Ff, 5, 16, SPEC, Activation::Tanh, &mut rng);
        let mb = random_batch(&p, 16, 1, &mut rng, 0.0);
        let cfg = PpoConfig { vf_coef: 0.0, entropy_coef: 0.0, ..PpoConfig::default() };
        let mut grads = p.params().zeros_like();
        let stats = minibatch_loss(&p, &mb, &cfg, Some(&mut grads)).unwrap();
        assert_eq!(stats.clip_fraction, 0.0);
        assert!(stats.approx_kl.abs() < 1e-15);

        // score-function objective −mean(Â · log π(a)), differentiated numerically
        let vanilla = |p: &Policy| {
            let (out, _) = p.forward_train(&mb.obs, &mb.starts, None, 1).unwrap();
            (0..mb.rows())
                .map(|r| {
                    let comps = &mb.actions[r * 3..(r + 1) * 3];
                    -mb.advantages[r] * head_grads(out.logits.row(r), comps, 4).log_prob
                })
                .sum::<f64>()
                / mb.rows() as f64
        };
        for ti in [0, 2, 3] {
            for k in 0..6 {
                let orig = p.params().tensors()[ti].data()[k];
                p.params_mut().tensors_mut()[ti].data_mut()[k] = orig + 1e-6;
                let up = vanilla(&p);
                p.params_mut().tensors_mut()[ti].data_mut()[k] = orig - 1e-6;
                let down = vanilla(&p);
                p.params_mut().tensors_mut()[ti].data_mut()[k] = orig;
                let numeric = (up - down) / 2e-6;
                assert!((numeric - grads[ti].data()[k]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn zero_advantage_leaves_only_value_and_entropy() {
        let mut rng = SimRng::seed_from_u64(14);
        let p = Policy::new(Arch::Ff, 5, 16, SPEC, Activation::Relu, &mut rng);
        let mut mb = random_batch(&p, 16, 1, &mut rng, 0.3);
        mb.advantages.iter_mut().for_each(|a| *a = 0.0);
        let cfg = PpoConfig { vf_coef: 0.0, entropy_coef: 0.0, ..PpoConfig::default() };
        let mut grads = p.params().zeros_like();
        let stats = minibatch_loss(&p, &mb, &cfg, Some(&mut grads)).unwrap();
        assert_eq!(stats.policy_loss, 0.0);
        assert!(grads.iter().all(|g| g.data().iter().all(|&v| v == 0.0)));

        let cfg = PpoConfig { vf_coef: 0.5, entropy_coef: 0.0, ..PpoConfig::default() };
        let mut grads = p.params().zeros_like();
        minibatch_loss(&p, &mb, &cfg, Some(&mut grads)).unwrap();
        // actor tensors untouched, critic tensors driven
        assert!(grads[..4].iter().all(|g| g.data().iter().all(|&v| v == 0.0)));
        assert!(grads[4..].iter().any(|g| g.data().iter().any(|&v| v != 0.0)));
    }

    #[test]
    fn clipped_rows_contribute_no_policy_gradient() {
        let mut rng = SimRng::seed_from_u64(15);
        let p = Policy::new(Arch::Ff, 5, 16, SPEC, Activation::Relu, &mut rng);
        let mut mb = random_batch(&p, 8, 1, &mut rng, 0.0);
        // ρ = e ≈ 2.72 with positive advantage: clipped branch active everywhere
        mb.old_log_probs.iter_mut().for_each(|l| *l -= 1.0);
        mb.advantages.iter_mut().for_each(|a| *a = 1.0);
        let cfg = PpoConfig { vf_coef: 0.0, entropy_coef: 0.0, ..PpoConfig::default() };
        let mut grads = p.params().zeros_like();
        let stats = minibatch_loss(&p, &mb, &cfg, Some(&mut grads)).unwrap();
        assert_eq!(stats.clip_fraction, 1.0);
        assert!((stats.policy_loss + 1.2).abs() < 1e-12);
        assert!(grads.iter().all(|g| g.data().iter().all(|&v| v == 0.0)));
    }

    proptest! {
        #[test]
        fn clipped_objective_is_pessimistic(ratio in 1e-3f64..10.0, adv in -5.0f64..5.0, eps in 0.01f64..0.9) {
            prop_assert!(clipped_surrogate(ratio, adv, eps) <= ratio * adv);
        }

        #[test]
        fn normalized_advantages_are_standard(adv in prop::collection::vec(-100.0f64..100.0, 2..600)) {
            let spread = adv.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - adv.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assume!(spread > 1e-3);
            let mut a = adv.clone();
            normalize_advantages(&mut a);
            let n = a.len() as f64;
            let mean = a.iter().sum::<f64>() / n;
            let std = (a.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
            prop_assert!(mean.abs() <= 1e-10);
            prop_assert!((std - 1.0).abs() <= 1e-6);
        }
    }
}
