//! Independent categorical heads over a fused logit row.
//!
//! A row of `n_heads * n_actions` logits is read as `n_heads` consecutive
//! blocks; each block parameterizes one action component.

use rand::Rng;

use super::NnError;
use crate::env::{ActionSpec, MultiDiscreteAction};

/// Numerically stable `log softmax` of one head.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&l| (l - max).exp()).sum::<f64>().ln();
    logits.iter().map(|&l| l - lse).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    log_softmax(logits).into_iter().map(f64::exp).collect()
}

fn check_finite(logits: &[f64]) -> Result<(), NnError> {
    if logits.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(NnError::Numerical("non-finite logits".into()))
    }
}

/// Samples every head independently.
///
/// Returns the action, the summed log-probability of the chosen components,
/// and the summed entropy (nats) of all heads.
pub fn sample_action<R: Rng + ?Sized>(
    logits: &[f64],
    spec: ActionSpec,
    rng: &mut R,
) -> Result<(MultiDiscreteAction, f64, f64), NnError> {
    check_finite(logits)?;
    let mut comps = Vec::with_capacity(spec.n_heads);
    let mut log_prob = 0.0;
    let mut entropy = 0.0;
    for head in logits.chunks_exact(spec.n_actions).take(spec.n_heads) {
        let lp = log_softmax(head);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut choice = spec.n_actions - 1;
        for (a, &l) in lp.iter().enumerate() {
            acc += l.exp();
            if u < acc {
                choice = a;
                break;
            }
        }
        log_prob += lp[choice];
        entropy -= lp.iter().map(|&l| l.exp() * l).sum::<f64>();
        comps.push(choice);
    }
    Ok((MultiDiscreteAction::from_components(&comps), log_prob, entropy))
}

/// Highest-probability component per head.
pub fn greedy_action(logits: &[f64], spec: ActionSpec) -> MultiDiscreteAction {
    let comps: Vec<usize> = logits
        .chunks_exact(spec.n_actions)
        .take(spec.n_heads)
        .map(|head| {
            head.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
                .0
        })
        .collect();
    MultiDiscreteAction::from_components(&comps)
}

/// Summed log-probability of `components` and summed entropy.
pub fn log_prob_and_entropy(logits: &[f64], components: &[usize], n_actions: usize) -> (f64, f64) {
    let mut log_prob = 0.0;
    let mut entropy = 0.0;
    for (head, &a) in logits.chunks_exact(n_actions).zip(components) {
        let lp = log_softmax(head);
        log_prob += lp[a];
        entropy -= lp.iter().map(|&l| l.exp() * l).sum::<f64>();
    }
    (log_prob, entropy)
}

/// Per-row statistics plus gradients of `log π(a)` and `H` w.r.t. logits.
pub(crate) struct HeadGrads {
    pub log_prob: f64,
    pub entropy: f64,
    pub d_log_prob: Vec<f64>,
    pub d_entropy: Vec<f64>,
}

pub(crate) fn head_grads(logits: &[f64], components: &[usize], n_actions: usize) -> HeadGrads {
    let mut out = HeadGrads {
        log_prob: 0.0,
        entropy: 0.0,
        d_log_prob: vec![0.0; logits.len()],
        d_entropy: vec![0.0; logits.len()],
    };
    for (h, (head, &a)) in logits.chunks_exact(n_actions).zip(components).enumerate() {
        let lp = log_softmax(head);
        let ent: f64 = -lp.iter().map(|&l| l.exp() * l).sum::<f64>();
        out.log_prob += lp[a];
        out.entropy += ent;
        let base = h * n_actions;
        for (k, &l) in lp.iter().enumerate() {
            let p = l.exp();
            out.d_log_prob[base + k] = if k == a { 1.0 - p } else { -p };
            out.d_entropy[base + k] = -p * (l + ent);
        }
    }
    out
}
