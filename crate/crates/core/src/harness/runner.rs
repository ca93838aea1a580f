use std::collections::hash_map::DefaultHasher;
use std::fs::File;
use std::hash::{Hash, Hasher};
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::diagnose::{mi_estimates, MiOutcome};
use super::histogram::{action_histogram, max_bin_share, write_histogram_csv};
use super::layout::{run_dir, variant_label, RunDir};
use super::{HarnessError, Scenario};
use crate::config::RunConfig;
use crate::env::{MultiAgentEnv, PredictionGame};
use crate::mi::{record_episodes, write_mi_report_csv, write_trajectory_csv, Pairing, TrajectoryLog};
use crate::nn::{load_checkpoint, save_checkpoint, Policy};
use crate::ppo::{MetricsWriter, Trainer};
use crate::SimRng;

/// Independent generator streams derived from one run seed.
pub(crate) mod stream {
    pub const ENV: u64 = 1;
    pub const INIT: u64 = 2;
    pub const TRAIN: u64 = 3;
    pub const EVAL_ENV: u64 = 4;
    pub const EVAL_ACTIONS: u64 = 5;
    pub const MI_JITTER: u64 = 6;
}

/// SplitMix64 finalizer over `seed` and a stream id.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One line of a run's `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: String,
    pub arch: String,
    pub blind: bool,
    pub seed: u64,
    pub metric: String,
    pub value: f64,
    pub units: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutcome {
    pub seed: u64,
    pub dir: PathBuf,
    pub rows: Vec<ResultRow>,
    /// The run was already complete and was left untouched.
    pub skipped: bool,
}

impl SeedOutcome {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.metric == name).map(|r| r.value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyOptions {
    pub out: PathBuf,
    /// Seeds run concurrently; 1 runs them one after another.
    pub jobs: usize,
    /// Recompute runs that are already complete.
    pub force: bool,
    /// Progress lines on stderr.
    pub verbose: bool,
}

impl FamilyOptions {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        Self { out: out.into(), jobs: 1, force: false, verbose: false }
    }
}

/// Runs every seed of the configured scenario, `master_seed + s` for
/// `s < n_seeds`. Outcomes come back in seed order.
pub fn run_family(cfg: &RunConfig, opts: &FamilyOptions) -> Result<Vec<SeedOutcome>, HarnessError> {
    cfg.validate()?;
    let seeds: Vec<u64> = (0..cfg.scenario.n_seeds as u64).map(|s| cfg.run.master_seed + s).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| HarnessError::Invalid(format!("cannot start {} worker threads: {e}", opts.jobs)))?;
    pool.install(|| seeds.par_iter().map(|&s| run_seed(cfg, opts, s)).collect())
}

/// Runs one seed of whichever scenario `cfg` names.
pub fn run_seed(cfg: &RunConfig, opts: &FamilyOptions, seed: u64) -> Result<SeedOutcome, HarnessError> {
    match cfg.scenario.kind {
        Scenario::Homogeneous4 => run_homogeneous(cfg, opts, seed),
        Scenario::TrainWithHeuristics => run_train_with_heuristics(cfg, opts, seed),
        Scenario::ZeroShotHeuristicSwap => run_zero_shot_swap(cfg, opts, seed),
    }
}

pub fn run_homogeneous(cfg: &RunConfig, opts: &FamilyOptions, seed: u64) -> Result<SeedOutcome, HarnessError> {
    expect_kind(cfg, Scenario::Homogeneous4)?;
    train_and_evaluate(cfg, opts, seed)
}

pub fn run_train_with_heuristics(cfg: &RunConfig, opts: &FamilyOptions, seed: u64) -> Result<SeedOutcome, HarnessError> {
    expect_kind(cfg, Scenario::TrainWithHeuristics)?;
    train_and_evaluate(cfg, opts, seed)
}

/// Evaluates the homogeneous checkpoints of the same variant and seed with
/// scripted partners in the configured slots. No parameter is updated; the
/// baseline checkpoint files are hashed before and after.
pub fn run_zero_shot_swap(cfg: &RunConfig, opts: &FamilyOptions, seed: u64) -> Result<SeedOutcome, HarnessError> {
    expect_kind(cfg, Scenario::ZeroShotHeuristicSwap)?;
    let (arch, blind) = (cfg.network.arch, cfg.scenario.blind);
    let dir = RunDir::new(run_dir(&opts.out, Scenario::ZeroShotHeuristicSwap, arch, blind, seed));
    if let Some(done) = reuse(&dir, opts, seed)? {
        return Ok(done);
    }
    let baseline = RunDir::new(run_dir(&opts.out, Scenario::Homogeneous4, arch, blind, seed));
    let env = build_env(cfg, derive_seed(seed, stream::EVAL_ENV), true)?;
    let learners = env.learners().to_vec();
    let mut manifest = Vec::new();
    for &a in &learners {
        let path = baseline.checkpoint(a);
        let bytes = std::fs::read(&path).map_err(|_| {
            HarnessError::MissingArtifact(format!(
                "baseline checkpoint {} (run the homogeneous scenario for this variant and seed first)",
                path.display()
            ))
        })?;
        manifest.push((a, path, file_hash(&bytes), bytes));
    }
    dir.prepare()?;
    write_frozen_config(cfg, &dir)?;
    let mut policies = Vec::with_capacity(learners.len());
    for (a, path, _, bytes) in &manifest {
        std::fs::write(dir.checkpoint(*a), bytes).map_err(HarnessError::io(dir.checkpoint(*a)))?;
        policies.push(Policy::from_checkpoint(load_checkpoint(path)?)?);
    }
    progress(opts, &dir, "evaluating baseline checkpoints with scripted partners");

    let with_partners = evaluate(cfg, &policies, seed, true)?;
    let without = evaluate(cfg, &policies_for_baseline(&baseline, cfg, seed)?, seed, false)?;

    let mut lines = String::from("agent,path,hash_before,hash_after\n");
    for (a, path, before, _) in &manifest {
        let after = std::fs::read(path).map(|b| file_hash(&b)).map_err(HarnessError::io(path))?;
        if after != *before {
            return Err(HarnessError::CheckpointMutated(path.clone()));
        }
        lines.push_str(&format!("{a},{},{before:016x},{after:016x}\n", path.display()));
    }
    std::fs::write(dir.baseline_manifest(), lines).map_err(HarnessError::io(dir.baseline_manifest()))?;

    let mut extra = vec![("baseline_return", mean(&without.episode_returns()), "reward")];
    extra.push(("return_drop", mean(&without.episode_returns()) - mean(&with_partners.episode_returns()), "reward"));
    finish_run(cfg, &dir, seed, &learners, &with_partners, &extra)
}

/// All four homogeneous agents, for the unmodified baseline evaluation.
fn policies_for_baseline(baseline: &RunDir, cfg: &RunConfig, seed: u64) -> Result<Vec<Policy>, HarnessError> {
    let env = build_env(cfg, derive_seed(seed, stream::EVAL_ENV), false)?;
    load_policies(baseline, env.learners())
}

fn expect_kind(cfg: &RunConfig, kind: Scenario) -> Result<(), HarnessError> {
    if cfg.scenario.kind != kind {
        return Err(HarnessError::Invalid(format!(
            "configuration names scenario `{}`, not `{}`",
            cfg.scenario.kind.label(),
            kind.label()
        )));
    }
    Ok(())
}

fn progress(opts: &FamilyOptions, dir: &RunDir, msg: &str) {
    if opts.verbose {
        eprintln!("[{}] {msg}", dir.root.display());
    }
}

/// Returns the stored outcome of a complete run unless `force` is set.
fn reuse(dir: &RunDir, opts: &FamilyOptions, seed: u64) -> Result<Option<SeedOutcome>, HarnessError> {
    if opts.force || !dir.is_complete() {
        return Ok(None);
    }
    progress(opts, dir, "already complete, skipping");
    let rows = super::summary::read_results(&dir.results())?;
    Ok(Some(SeedOutcome { seed, dir: dir.root.clone(), rows, skipped: true }))
}

/// Scripted partners are added only when the scenario has them and
/// `partners` is set.
pub(crate) fn build_env(cfg: &RunConfig, env_seed: u64, partners: bool) -> Result<PredictionGame, HarnessError> {
    let p = if partners { cfg.scenario.partners() } else { Vec::new() };
    Ok(PredictionGame::with_heuristics(cfg.env_config(env_seed), &p)?)
}

pub(crate) fn load_policies(dir: &RunDir, agents: &[usize]) -> Result<Vec<Policy>, HarnessError> {
    agents
        .iter()
        .map(|&a| {
            let path = dir.checkpoint(a);
            if !path.is_file() {
                return Err(HarnessError::MissingArtifact(format!("checkpoint {}", path.display())));
            }
            Ok(Policy::from_checkpoint(load_checkpoint(&path)?)?)
        })
        .collect()
}

/// Plays the configured number of evaluation episodes.
pub(crate) fn evaluate(cfg: &RunConfig, policies: &[Policy], seed: u64, partners: bool) -> Result<TrajectoryLog, HarnessError> {
    let mut env = build_env(cfg, derive_seed(seed, stream::EVAL_ENV), partners)?;
    Ok(record_episodes(
        policies,
        &mut env,
        cfg.scenario.eval_episodes,
        cfg.scenario.eval_mode,
        derive_seed(seed, stream::EVAL_ACTIONS),
    )?)
}

fn train_and_evaluate(cfg: &RunConfig, opts: &FamilyOptions, seed: u64) -> Result<SeedOutcome, HarnessError> {
    let (arch, blind) = (cfg.network.arch, cfg.scenario.blind);
    let dir = RunDir::new(run_dir(&opts.out, cfg.scenario.kind, arch, blind, seed));
    if let Some(done) = reuse(&dir, opts, seed)? {
        return Ok(done);
    }
    dir.prepare()?;
    write_frozen_config(cfg, &dir)?;

    let envs = (0..cfg.ppo.num_envs as u64)
        .map(|lane| build_env(cfg, derive_seed(seed, stream::ENV).wrapping_add(lane), true))
        .collect::<Result<Vec<_>, _>>()?;
    let learners = envs[0].learners().to_vec();
    let mut rng = SimRng::seed_from_u64(derive_seed(seed, stream::INIT));
    let policies: Vec<Policy> = learners
        .iter()
        .map(|_| {
            Policy::new(arch, envs[0].obs_dim(), cfg.network.hidden, envs[0].action_spec(), cfg.network.activation, &mut rng)
        })
        .collect();
    let mut trainer =
        Trainer::new(envs, policies, cfg.ppo.clone(), derive_seed(seed, stream::TRAIN))?.with_parallel_agents(cfg.run.parallel_agents);
    let file = File::create(dir.metrics()).map_err(HarnessError::io(dir.metrics()))?;
    let mut metrics = MetricsWriter::new(BufWriter::new(file), learners.len())?;
    let every = cfg.run.checkpoint_every;
    let total = trainer.num_updates();
    progress(opts, &dir, &format!("training {total} updates"));
    trainer.train(|m, tr| {
        metrics.write(m)?;
        if every > 0 && m.update % every == 0 && !tr.is_finished() {
            std::fs::create_dir_all(dir.interval_checkpoint(m.update, 0).parent().expect("nested path"))
                .map_err(crate::nn::NnError::from)?;
            for (p, &a) in tr.policies().into_iter().zip(&learners) {
                save_checkpoint(&dir.interval_checkpoint(m.update, a), &p.to_checkpoint())?;
            }
        }
        if opts.verbose && (m.update % (total / 10).max(1) == 0 || m.update == total) {
            eprintln!("[{}] update {}/{total}  mean return {:.3}", dir.root.display(), m.update, m.mean_return);
        }
        Ok(())
    })?;
    drop(metrics);
    let policies = trainer.into_policies();
    for (p, &a) in policies.iter().zip(&learners) {
        save_checkpoint(&dir.checkpoint(a), &p.to_checkpoint())?;
    }
    progress(opts, &dir, "evaluating");
    let log = evaluate(cfg, &policies, seed, true)?;
    finish_run(cfg, &dir, seed, &learners, &log, &[])
}

fn write_frozen_config(cfg: &RunConfig, dir: &RunDir) -> Result<(), HarnessError> {
    std::fs::write(dir.config(), cfg.to_toml()).map_err(HarnessError::io(dir.config()))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

fn file_hash(bytes: &[u8]) -> u64 {
    let mut h = DefaultHasher::new();
    bytes.hash(&mut h);
    h.finish()
}

/// Writes trajectories, histogram, MI report and finally `results.csv`.
fn finish_run(
    cfg: &RunConfig,
    dir: &RunDir,
    seed: u64,
    learners: &[usize],
    log: &TrajectoryLog,
    extra: &[(&str, f64, &str)],
) -> Result<SeedOutcome, HarnessError> {
    let stored = if cfg.mi.log_hidden {
        log.clone()
    } else {
        let mut l = log.clone();
        l.hidden_dim = 0;
        l.steps.iter_mut().for_each(|s| s.hidden.clear());
        l
    };
    let f = File::create(dir.trajectories()).map_err(HarnessError::io(dir.trajectories()))?;
    write_trajectory_csv(BufWriter::new(f), &stored)?;

    let hist = action_histogram(log, learners);
    let f = File::create(dir.histogram()).map_err(HarnessError::io(dir.histogram()))?;
    write_histogram_csv(BufWriter::new(f), &hist).map_err(HarnessError::table(dir.histogram()))?;

    let pairings: Vec<Pairing> = if log.hidden_dim > 0 {
        vec![Pairing::ObsAction, Pairing::HiddenAction]
    } else {
        vec![Pairing::ObsAction]
    };
    let mi = mi_estimates(log, learners, &pairings, cfg.mi.k, cfg.mi.units, derive_seed(seed, stream::MI_JITTER))?;
    let f = File::create(dir.mi_report()).map_err(HarnessError::io(dir.mi_report()))?;
    write_mi_report_csv(BufWriter::new(f), &mi.rows)?;
    write_meta(dir, cfg, &mi)?;

    let (scenario, arch) = (cfg.scenario.kind.label(), variant_arch(cfg));
    let row = |metric: &str, value: f64, units: &str| ResultRow {
        scenario: scenario.into(),
        arch: arch.clone(),
        blind: cfg.scenario.blind,
        seed,
        metric: metric.into(),
        value,
        units: units.into(),
    };
    let mut rows = vec![row("return", mean(&log.episode_returns()), "reward")];
    for &(m, v, u) in extra {
        rows.push(row(m, v, u));
    }
    for (pairing, value) in &mi.means {
        rows.push(row(&format!("mi_{}", pairing.label()), *value, cfg.mi.units.label()));
    }
    let share = mean(&learners.iter().map(|&a| max_bin_share(&hist, a, 0)).collect::<Vec<_>>());
    rows.push(row("own_action_max_share", share, "fraction"));

    let tmp = dir.root.join("results.csv.partial");
    {
        let mut w = csv::Writer::from_path(&tmp).map_err(HarnessError::table(&tmp))?;
        for r in &rows {
            w.serialize(r).map_err(HarnessError::table(&tmp))?;
        }
        w.flush().map_err(HarnessError::io(&tmp))?;
    }
    std::fs::rename(&tmp, dir.results()).map_err(HarnessError::io(dir.results()))?;
    Ok(SeedOutcome { seed, dir: dir.root.clone(), rows, skipped: false })
}

fn variant_arch(cfg: &RunConfig) -> String {
    cfg.network.arch.to_string()
}

fn write_meta(dir: &RunDir, cfg: &RunConfig, mi: &MiOutcome) -> Result<(), HarnessError> {
    let mut f = BufWriter::new(File::create(dir.mi_meta()).map_err(HarnessError::io(dir.mi_meta()))?);
    let w = |f: &mut BufWriter<File>, s: String| writeln!(f, "{s}").map_err(HarnessError::io(dir.mi_meta()));
    w(&mut f, format!("variant = {}", variant_label(cfg.network.arch, cfg.scenario.blind)))?;
    w(&mut f, format!("k = {}", cfg.mi.k))?;
    w(&mut f, format!("units = {}", cfg.mi.units.label()))?;
    w(&mut f, format!("jitter = {:e} x per-dimension range", crate::mi::JITTER_SCALE))?;
    w(&mut f, "hidden_state = post-update state that produced the action".into())?;
    w(&mut f, format!("action_mode = {:?}", cfg.scenario.eval_mode).to_lowercase())?;
    for line in &mi.notes {
        w(&mut f, line.clone())?;
    }
    f.flush().map_err(HarnessError::io(dir.mi_meta()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_streams_differ() {
        let s: Vec<u64> = (1..=6).map(|k| derive_seed(7, k)).collect();
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                assert_ne!(s[i], s[j]);
            }
        }
        assert_ne!(derive_seed(7, 1), derive_seed(8, 1));
        assert_eq!(derive_seed(7, 1), derive_seed(7, 1));
    }
}
