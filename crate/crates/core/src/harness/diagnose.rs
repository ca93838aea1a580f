use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use super::histogram::{action_histogram, max_bin_share};
use super::layout::RunDir;
use super::runner::{build_env, derive_seed, evaluate, load_policies, stream, ResultRow};
use super::{HarnessError, Scenario};
use crate::config::RunConfig;
use crate::mi::{
    drop_rare_classes, mi_report, mi_ross, read_trajectory_csv, sample_set, write_mi_report_csv, ActionMode, Estimator,
    MIEstimate, MiReportRow, Pairing, TrajectoryLog, Units, Variable,
};
use crate::nn::Arch;

/// Per-agent rows plus a `mean` row for every pairing.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct MiOutcome {
    pub rows: Vec<MiReportRow>,
    /// Cross-agent mean per pairing, in the requested units.
    pub means: Vec<(Pairing, f64)>,
    /// Dropped rare classes and degenerate cases.
    pub notes: Vec<String>,
}

/// Estimates every requested pairing for every learner slot of `log`.
/// Hidden-state estimates drop action classes with at most `k` samples,
/// and a single remaining class yields 0.
pub(crate) fn mi_estimates(
    log: &TrajectoryLog,
    agent_ids: &[usize],
    pairings: &[Pairing],
    k: usize,
    units: Units,
    seed: u64,
) -> Result<MiOutcome, HarnessError> {
    let mut out = MiOutcome { rows: Vec::new(), means: Vec::new(), notes: Vec::new() };
    for &pairing in pairings {
        let mut estimates = Vec::with_capacity(agent_ids.len());
        for (slot, &agent) in agent_ids.iter().enumerate() {
            let samples = sample_set(log, slot, pairing)?;
            let est = match (&samples.x, &samples.y) {
                (Variable::Continuous { dim, data }, Variable::Discrete(labels)) => {
                    let (x, y, dropped) = drop_rare_classes(data, *dim, labels, k);
                    if !dropped.is_empty() {
                        let kept = y.len();
                        let list: Vec<String> = dropped.iter().map(|(l, c)| format!("{l}:{c}")).collect();
                        out.notes.push(format!(
                            "agent {agent} {}: dropped {} rare action classes (label:count {}), kept {kept} of {} samples",
                            pairing.label(),
                            dropped.len(),
                            list.join(" "),
                            labels.len()
                        ));
                    }
                    let mut distinct = y.clone();
                    distinct.sort_unstable();
                    distinct.dedup();
                    if distinct.len() < 2 {
                        out.notes.push(format!(
                            "agent {agent} {}: a single action class remains, estimate set to 0",
                            pairing.label()
                        ));
                        MIEstimate::nats(0.0, Estimator::Ross, Some(k), y.len())
                    } else {
                        mi_ross(&x, *dim, &y, k, seed.wrapping_add(slot as u64))?
                    }
                }
                _ => samples.estimate(k, seed.wrapping_add(slot as u64))?,
            }
            .to(units);
            out.rows.push(MiReportRow::new(agent.to_string(), pairing.label(), &est));
            estimates.push(est);
        }
        let report = mi_report(&estimates)?;
        let mean = MIEstimate { value: report.mean, ..estimates[0] };
        out.rows.push(MiReportRow::new("mean", pairing.label(), &mean));
        out.means.push((pairing, report.mean));
    }
    Ok(out)
}

/// A finished run directory, its frozen configuration and its seed.
struct LoadedRun {
    dir: RunDir,
    cfg: RunConfig,
    seed: u64,
}

fn open_run(path: &Path) -> Result<LoadedRun, HarnessError> {
    let dir = RunDir::new(path);
    if !dir.config().is_file() {
        return Err(HarnessError::MissingArtifact(format!("{} has no config.toml", path.display())));
    }
    let cfg = crate::config::load(None, Some(&dir.config()), &[])?;
    let seed = path
        .file_name()
        .and_then(|n| n.to_str())
        .and_then(|n| n.parse::<u64>().ok())
        .ok_or_else(|| HarnessError::Invalid(format!("{} is not a seed directory", path.display())))?;
    Ok(LoadedRun { dir, cfg, seed })
}

fn learners(cfg: &RunConfig) -> Result<Vec<usize>, HarnessError> {
    Ok(build_env(cfg, 0, true)?.learners().to_vec())
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiagnoseOptions {
    /// Empty: every pairing the architecture supports.
    pub pairings: Vec<Pairing>,
    pub units: Option<Units>,
    pub k: Option<usize>,
    /// Re-record this many evaluation episodes instead of reading the log.
    pub episodes: Option<usize>,
    /// Ignore stored trajectories and re-record from checkpoints.
    pub recollect: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnoseReport {
    pub path: PathBuf,
    pub rows: Vec<MiReportRow>,
    pub means: Vec<(Pairing, f64)>,
    pub units: Units,
}

/// Computes MI estimates for a finished run and writes them to a new
/// timestamped report inside the run directory. Stored trajectories are
/// used when they hold what the pairing needs; otherwise evaluation
/// episodes are re-recorded from the checkpoints with the run's own seeds.
pub fn diagnose(run: &Path, opts: &DiagnoseOptions) -> Result<DiagnoseReport, HarnessError> {
    let LoadedRun { dir, mut cfg, seed } = open_run(run)?;
    let pairings = if opts.pairings.is_empty() {
        match cfg.network.arch {
            Arch::Rnn => vec![Pairing::ObsAction, Pairing::HiddenAction],
            Arch::Ff => vec![Pairing::ObsAction],
        }
    } else {
        opts.pairings.clone()
    };
    if cfg.network.arch == Arch::Ff && pairings.contains(&Pairing::HiddenAction) {
        return Err(HarnessError::Unsupported(
            "hidden_action pairing on a feed-forward run (it has no recurrent state)".into(),
        ));
    }
    let agents = learners(&cfg)?;
    let needs_hidden = pairings.contains(&Pairing::HiddenAction);
    let stored = if opts.recollect || opts.episodes.is_some() || !dir.trajectories().is_file() {
        None
    } else {
        let f = File::open(dir.trajectories()).map_err(HarnessError::io(dir.trajectories()))?;
        Some(read_trajectory_csv(std::io::BufReader::new(f), Some(cfg.env.n_actions))?)
    };
    let log = match stored {
        Some(log) if !needs_hidden || log.hidden_dim > 0 => log,
        _ => {
            if let Some(n) = opts.episodes {
                cfg.scenario.eval_episodes = n;
            }
            let policies = load_policies(&dir, &agents)?;
            evaluate(&cfg, &policies, seed, true)?
        }
    };
    let units = opts.units.unwrap_or(cfg.mi.units);
    let k = opts.k.unwrap_or(cfg.mi.k);
    let mi = mi_estimates(&log, &agents, &pairings, k, units, derive_seed(seed, stream::MI_JITTER))?;
    let path = dir.timestamped("mi_report");
    let f = File::create(&path).map_err(HarnessError::io(&path))?;
    write_mi_report_csv(BufWriter::new(f), &mi.rows)?;
    Ok(DiagnoseReport { path, rows: mi.rows, means: mi.means, units })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalOptions {
    pub episodes: Option<usize>,
    pub mode: Option<ActionMode>,
    /// Force scripted partners on (zero-shot evaluation of a homogeneous
    /// run) or off. `None` keeps the run's own setting.
    pub partners: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub path: PathBuf,
    pub mean_return: f64,
    pub episodes: usize,
    pub rows: Vec<ResultRow>,
}

/// Re-evaluates a run's checkpoints and writes a new timestamped
/// `eval_*.csv` in the run directory.
pub fn evaluate_run(run: &Path, opts: &EvalOptions) -> Result<EvalSummary, HarnessError> {
    let LoadedRun { dir, mut cfg, seed } = open_run(run)?;
    if let Some(n) = opts.episodes {
        cfg.scenario.eval_episodes = n;
    }
    if let Some(m) = opts.mode {
        cfg.scenario.eval_mode = m;
    }
    match opts.partners {
        Some(true) if cfg.scenario.kind == Scenario::Homogeneous4 => cfg.scenario.kind = Scenario::ZeroShotHeuristicSwap,
        Some(false) => cfg.scenario.kind = Scenario::Homogeneous4,
        _ => {}
    }
    cfg.validate()?;
    let agents = learners(&cfg)?;
    let policies = load_policies(&dir, &agents)?;
    let log = evaluate(&cfg, &policies, seed, true)?;
    let returns = log.episode_returns();
    let mean_return = returns.iter().sum::<f64>() / returns.len() as f64;
    let hist = action_histogram(&log, &agents);
    let share = agents.iter().map(|&a| max_bin_share(&hist, a, 0)).sum::<f64>() / agents.len() as f64;
    let row = |metric: &str, value: f64, units: &str| ResultRow {
        scenario: cfg.scenario.kind.label().into(),
        arch: cfg.network.arch.to_string(),
        blind: cfg.scenario.blind,
        seed,
        metric: metric.into(),
        value,
        units: units.into(),
    };
    let rows = vec![
        row("return", mean_return, "reward"),
        row("episodes", returns.len() as f64, "count"),
        row("own_action_max_share", share, "fraction"),
    ];
    let path = dir.timestamped("eval");
    let mut w = csv::Writer::from_path(&path).map_err(HarnessError::table(&path))?;
    for r in &rows {
        w.serialize(r).map_err(HarnessError::table(&path))?;
    }
    w.flush().map_err(HarnessError::io(&path))?;
    Ok(EvalSummary { path, mean_return, episodes: returns.len(), rows })
}
