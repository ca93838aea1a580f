//! Fast oracle suite: every numerical core checked against an independent
//! reference. Runs in well under a minute in release builds.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::env::{HeuristicPolicy, MultiAgentEnv, TwoArmedBandit};
use crate::mi::digamma::{digamma_reference, digamma_with, SERIES};
use crate::mi::{mi_ksg, mi_plugin, mi_ross, plugin_entropy};
use crate::nn::categorical::softmax;
use crate::nn::{Activation, Arch, Policy, Tensor};
use crate::ppo::gradcheck::{max_relative_error, random_minibatch};
use crate::ppo::{compute_gae, PpoConfig, Trainer};
use crate::SimRng;

/// Deliberate defects used to confirm that the suite catches them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Perturbs the leading digamma series coefficient.
    DigammaCoefficient,
}

impl std::str::FromStr for Fault {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "digamma" | "digamma-coefficient" => Ok(Fault::DigammaCoefficient),
            _ => Err(format!("unknown fault `{s}` (available: digamma)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

type Check = fn(Option<Fault>) -> Result<String, String>;

const CHECKS: &[(&str, Check)] = &[
    ("digamma", check_digamma),
    ("mi_plugin", check_plugin),
    ("mi_ksg", check_ksg),
    ("mi_ross", check_ross),
    ("gradient_ff", |_| check_gradient(Arch::Ff)),
    ("gradient_rnn", |_| check_gradient(Arch::Rnn)),
    ("gae", check_gae),
    ("heuristics", check_heuristics),
    ("bandit_ppo", check_bandit),
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|(n, _)| *n).collect()
}

/// Runs the checks named in `only` (all when empty), reporting each as it
/// finishes. A panicking check counts as failed.
pub fn run(only: &[String], fault: Option<Fault>, mut on_result: impl FnMut(&CheckOutcome)) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    for (name, check) in CHECKS {
        if !only.is_empty() && !only.iter().any(|o| o == name) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(|| check(fault)))
            .unwrap_or_else(|p| {
                let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
                Err(msg.unwrap_or_else(|| "check panicked".into()))
            });
        let outcome = CheckOutcome {
            name,
            passed: result.is_ok(),
            detail: result.unwrap_or_else(|e| e),
            elapsed: start.elapsed(),
        };
        on_result(&outcome);
        out.push(outcome);
    }
    out
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn check_digamma(fault: Option<Fault>) -> Result<String, String> {
    let mut series = SERIES;
    if fault == Some(Fault::DigammaCoefficient) {
        series[0] = 1.0 / 11.0;
    }
    let psi = |x: f64| digamma_with(x, &series);
    let mut rng = SimRng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let x = 10f64.powf(rng.random_range(-3.0..6.0));
        let err = (psi(x) - digamma_reference(x)).abs();
        worst = worst.max(err);
        ensure(err <= 1e-10, || format!("|psi({x}) - reference| = {err:e} > 1e-10"))?;
        let rec = (psi(x + 1.0) - psi(x) - 1.0 / x).abs();
        ensure(rec <= 1e-12, || format!("recurrence off by {rec:e} at x = {x}"))?;
    }
    Ok(format!("max error {worst:.1e} over 50 points"))
}

fn check_plugin(_: Option<Fault>) -> Result<String, String> {
    let mut rng = SimRng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for table in 0..100 {
        let (nx, ny) = (rng.random_range(2..6u64), rng.random_range(2..6u64));
        let counts: Vec<u64> = (0..nx * ny).map(|_| rng.random_range(0..6)).collect();
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for (cell, &c) in counts.iter().enumerate() {
            for _ in 0..c {
                x.push(cell as u64 / ny);
                y.push(cell as u64 % ny);
            }
        }
        if x.len() < 2 {
            continue;
        }
        let n = x.len() as f64;
        let px = |i: u64| (0..ny).map(|j| counts[(i * ny + j) as usize]).sum::<u64>() as f64 / n;
        let py = |j: u64| (0..nx).map(|i| counts[(i * ny + j) as usize]).sum::<u64>() as f64 / n;
        let mut direct = 0.0;
        for i in 0..nx {
            for j in 0..ny {
                let p = counts[(i * ny + j) as usize] as f64 / n;
                if p > 0.0 {
                    direct += p * (p / (px(i) * py(j))).ln();
                }
            }
        }
        let est = mi_plugin(&x, &y).map_err(|e| e.to_string())?.value;
        let swapped = mi_plugin(&y, &x).map_err(|e| e.to_string())?.value;
        ensure(est == swapped, || format!("table {table}: asymmetric {est} vs {swapped}"))?;
        worst = worst.max((est - direct.max(0.0)).abs());
        let fx: Vec<u64> = x.iter().map(|v| v % 2).collect();
        let ident = (mi_plugin(&x, &fx).map_err(|e| e.to_string())?.value - plugin_entropy(&fx)).abs();
        worst = worst.max(ident);
        let (ix, iy): (Vec<u64>, Vec<u64>) = (0..nx).flat_map(|i| (0..ny).flat_map(move |j| vec![(i, j); ((i + 1) * (j + 1)) as usize])).unzip();
        worst = worst.max(mi_plugin(&ix, &iy).map_err(|e| e.to_string())?.value.abs());
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e} > 1e-12"))?;
    Ok(format!("100 tables, max deviation {worst:.1e}"))
}

fn check_ksg(_: Option<Fault>) -> Result<String, String> {
    let mut parts = Vec::new();
    for (i, rho) in [0.0f64, 0.5, 0.9].into_iter().enumerate() {
        let mut rng = SimRng::seed_from_u64(30 + i as u64);
        let (mut x, mut y) = (Vec::with_capacity(10_000), Vec::with_capacity(10_000));
        for _ in 0..10_000 {
            let (a, b): (f64, f64) = (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
            x.push(a);
            y.push(rho * a + (1.0 - rho * rho).sqrt() * b);
        }
        let truth = -0.5 * (1.0 - rho * rho).ln();
        let est = mi_ksg(&x, 1, &y, 1, 3, i as u64).map_err(|e| e.to_string())?.value;
        ensure((est - truth).abs() <= 0.05, || format!("rho {rho}: {est:.4} vs {truth:.4} nats"))?;
        parts.push(format!("rho {rho}: {est:.3}/{truth:.3}"));
    }
    Ok(parts.join(", "))
}

/// MI between an equal two-component Gaussian mixture and its label, by
/// trapezoid integration of the posterior entropy.
fn mixture_mi(mean: f64, sd: f64) -> f64 {
    let pdf = |x: f64, m: f64| (-(x - m).powi(2) / (2.0 * sd * sd)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt());
    let (lo, hi, steps) = (-mean - 12.0 * sd, mean + 12.0 * sd, 100_000);
    let h = (hi - lo) / steps as f64;
    let mut cond = 0.0;
    for s in 0..=steps {
        let x = lo + s as f64 * h;
        let (a, b) = (0.5 * pdf(x, -mean), 0.5 * pdf(x, mean));
        let px = a + b;
        if px > 0.0 {
            let ent: f64 = [a / px, b / px].iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum();
            cond += if s == 0 || s == steps { 0.5 } else { 1.0 } * px * ent * h;
        }
    }
    2f64.ln() - cond
}

fn check_ross(_: Option<Fault>) -> Result<String, String> {
    let sample = |mean: f64, seed: u64| {
        let mut rng = SimRng::seed_from_u64(seed);
        let mut x = Vec::with_capacity(5000);
        let mut y = Vec::with_capacity(5000);
        for i in 0..5000 {
            let label = (i % 2) as u64;
            let centre = if label == 0 { -mean } else { mean };
            x.push(Normal::new(centre, 0.5).expect("positive sd").sample(&mut rng));
            y.push(label);
        }
        (x, y)
    };
    let (x, y) = sample(0.0, 40);
    let indep = mi_ross(&x, 1, &y, 3, 0).map_err(|e| e.to_string())?.value;
    ensure(indep.abs() <= 0.05, || format!("independent labels: {indep:.4} nats"))?;
    let (x, y) = sample(1.0, 41);
    let est = mi_ross(&x, 1, &y, 3, 0).map_err(|e| e.to_string())?.value;
    let truth = mixture_mi(1.0, 0.5);
    ensure((est - truth).abs() <= 0.07, || format!("mixture: {est:.4} vs {truth:.4} nats"))?;
    Ok(format!("independent {indep:.3}, mixture {est:.3}/{truth:.3}"))
}

fn check_gradient(arch: Arch) -> Result<String, String> {
    let spec = crate::env::ActionSpec { n_heads: 3, n_actions: 4 };
    let mut rng = SimRng::seed_from_u64(50 + arch as u64);
    let mut worst: f64 = 0.0;
    for instance in 0..5 {
        let act = if instance % 2 == 0 { Activation::Relu } else { Activation::Tanh };
        let mut p = Policy::new(arch, 5, 12, spec, act, &mut rng);
        let (rows, steps) = match arch {
            Arch::Ff => (24, 1),
            Arch::Rnn => (24, 8),
        };
        let mb = random_minibatch(&p, rows, steps, &mut rng, 0.1);
        let err = max_relative_error(&mut p, &mb, &PpoConfig::default(), 12, &mut rng);
        worst = worst.max(err);
        ensure(err <= 1e-4, || format!("instance {instance}: relative error {err:e}"))?;
    }
    Ok(format!("5 instances, max relative error {worst:.1e}"))
}

fn check_gae(_: Option<Fault>) -> Result<String, String> {
    let (adv, _) = compute_gae(&[1.0, 0.0, 1.0], &[0.5; 3], &[false; 3], &[0.0], 1, 0.99, 0.95);
    for (got, want) in adv.iter().zip([1.432_567_625, 0.465_25, 0.5]) {
        ensure((got - want).abs() <= 1e-12, || format!("advantage {got} vs hand-unrolled {want}"))?;
    }
    let (r, v, d) = ([0.3, -1.0, 2.0, 0.5], [0.1, 0.4, -0.2, 0.7], [false, true, false, false]);
    let (td, _) = compute_gae(&r, &v, &d, &[1.5, -0.5], 2, 0.9, 0.0);
    let (myopic, _) = compute_gae(&r, &v, &d, &[1.5, -0.5], 2, 0.0, 0.7);
    for k in 0..4 {
        let next = if k + 2 < 4 { v[k + 2] } else { [1.5, -0.5][k % 2] };
        let live = if d[k] { 0.0 } else { 1.0 };
        ensure(td[k] == r[k] + 0.9 * next * live - v[k], || format!("lambda = 0 row {k}: {}", td[k]))?;
        ensure(myopic[k] == r[k] - v[k], || format!("gamma = 0 row {k}: {}", myopic[k]))?;
    }
    Ok("hand unroll and both degeneracies exact".into())
}

fn check_heuristics(_: Option<Fault>) -> Result<String, String> {
    let h0 = HeuristicPolicy::new(0, 3, 4).with_phase(1);
    let seq: Vec<usize> = (0..12).map(|t| h0.action(t)).collect();
    ensure(seq == [1, 1, 1, 2, 2, 2, 3, 3, 3, 0, 0, 0], || format!("k = 3 example gave {seq:?}"))?;
    let h2 = HeuristicPolicy::new(2, 2, 4);
    let seq: Vec<usize> = (0..10).map(|t| h2.action(t)).collect();
    ensure(seq == [2, 2, 3, 3, 0, 0, 1, 1, 2, 2], || format!("k = 2 example gave {seq:?}"))?;
    for a in [2usize, 4] {
        for k in [1usize, 2, 3, 5] {
            for phase in 0..k {
                let h = HeuristicPolicy::new(1, k, a).with_phase(phase);
                ensure(h.period() == k * a, || format!("period {} for k = {k}, A = {a}", h.period()))?;
                for t in 0..3 * k * a {
                    ensure(h.action(t) == h.action(t + k * a), || format!("k = {k}, A = {a} not periodic at t = {t}"))?;
                }
            }
        }
    }
    Ok("worked examples and periods k*A".into())
}

fn check_bandit(_: Option<Fault>) -> Result<String, String> {
    let mut probs = Vec::new();
    for seed in 0..3 {
        let cfg = PpoConfig { total_timesteps: 50_000, num_steps: 64, num_envs: 8, learning_rate: 3e-3, ..PpoConfig::default() };
        let envs = vec![TwoArmedBandit::new(); cfg.num_envs];
        let mut rng = SimRng::seed_from_u64(seed);
        let policy = Policy::new(Arch::Ff, 1, 16, envs[0].action_spec(), Activation::Relu, &mut rng);
        let mut trainer = Trainer::new(envs, vec![policy], cfg, seed).map_err(|e| e.to_string())?;
        trainer.train(|_, _| Ok(())).map_err(|e| e.to_string())?;
        let obs = Tensor::from_vec(&[1, 1], vec![1.0]).map_err(|e| e.to_string())?;
        let out = trainer.policies()[0]
            .infer(&obs, &mut Tensor::zeros(&[1, 0]), &[true])
            .map_err(|e| e.to_string())?;
        let p = softmax(out.logits.row(0))[0];
        ensure(p >= 0.95, || format!("seed {seed}: P(best arm) = {p:.3}"))?;
        probs.push(format!("{p:.3}"));
    }
    Ok(format!("P(best arm) {}", probs.join(" ")))
}
