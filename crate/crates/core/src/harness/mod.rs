//! Experiment orchestration: the three Prediction Game scenarios run over
//! seeds, evaluation and diagnostics, bootstrap confidence intervals, action
//! histograms and the CSV tables that summarize a family of runs.
//!
//! Runs live under `<out>/runs/<scenario>/<arch>[_blind]/<seed>/`.

mod bootstrap;
mod diagnose;
mod histogram;
mod layout;
mod runner;
mod summary;

pub use bootstrap::{bootstrap_ci, BootstrapCI, DEFAULT_RESAMPLES};
pub use diagnose::{diagnose, evaluate_run, DiagnoseOptions, DiagnoseReport, EvalOptions, EvalSummary};
pub use histogram::{action_histogram, max_bin_share, write_histogram_csv, HistogramRow};
pub use layout::{run_dir, variant_label, RunDir};
pub use runner::{
    derive_seed, run_family, run_homogeneous, run_seed, run_train_with_heuristics, run_zero_shot_swap, FamilyOptions,
    ResultRow, SeedOutcome,
};
pub use summary::{read_results, report, CurveRow, ReportOutput, SummaryRow};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ConfigError;
use crate::env::EnvError;
use crate::mi::{ActionMode, MiError};
use crate::nn::NnError;
use crate::ppo::PpoError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
pub enum Scenario {
    /// Four learners trained together.
    #[default]
    #[serde(rename = "homogeneous")]
    Homogeneous4,
    /// Homogeneous checkpoints evaluated with scripted partners, no training.
    #[serde(rename = "zero_shot_swap")]
    ZeroShotHeuristicSwap,
    /// Learners trained from scratch alongside scripted partners.
    #[serde(rename = "train_with_heuristics")]
    TrainWithHeuristics,
}

impl Scenario {
    pub fn label(self) -> &'static str {
        match self {
            Scenario::Homogeneous4 => "homogeneous",
            Scenario::ZeroShotHeuristicSwap => "zero_shot_swap",
            Scenario::TrainWithHeuristics => "train_with_heuristics",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        [Scenario::Homogeneous4, Scenario::ZeroShotHeuristicSwap, Scenario::TrainWithHeuristics]
            .into_iter()
            .find(|v| v.label() == s)
    }

    pub fn uses_heuristics(self) -> bool {
        self != Scenario::Homogeneous4
    }

    pub fn trains(self) -> bool {
        self != Scenario::ZeroShotHeuristicSwap
    }
}

/// Scenario settings. Architecture and PPO settings live in their own
/// configuration sections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSpec {
    pub kind: Scenario,
    pub blind: bool,
    /// Agent indices replaced by scripted partners.
    pub heuristic_agents: Vec<usize>,
    /// Cycle length of each scripted partner, matched by position.
    pub heuristic_cycles: Vec<usize>,
    pub n_seeds: usize,
    pub eval_episodes: usize,
    pub eval_mode: ActionMode,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            kind: Scenario::Homogeneous4,
            blind: false,
            heuristic_agents: vec![2, 3],
            heuristic_cycles: vec![3, 2],
            n_seeds: 10,
            eval_episodes: 1000,
            eval_mode: ActionMode::Stochastic,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self, n_agents: usize) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Invalid(m));
        if self.n_seeds == 0 {
            return bad("scenario.n_seeds must be positive".into());
        }
        if self.eval_episodes == 0 {
            return bad("scenario.eval_episodes must be positive".into());
        }
        if self.heuristic_agents.len() != self.heuristic_cycles.len() {
            return bad(format!(
                "{} heuristic agents but {} cycle lengths",
                self.heuristic_agents.len(),
                self.heuristic_cycles.len()
            ));
        }
        if self.kind.uses_heuristics() {
            if self.heuristic_agents.is_empty() || self.heuristic_agents.len() >= n_agents {
                return bad(format!("need between 1 and {} heuristic agents", n_agents - 1));
            }
            let mut seen = vec![false; n_agents];
            for &a in &self.heuristic_agents {
                if a >= n_agents || std::mem::replace(&mut seen[a], true) {
                    return bad(format!("heuristic agent {a} is out of range or repeated"));
                }
            }
            if self.heuristic_cycles.contains(&0) {
                return bad("heuristic cycle lengths must be positive".into());
            }
        }
        Ok(())
    }

    /// `(agent_index, cycle_len)` pairs for the environment, empty when the
    /// scenario has no scripted partners.
    pub fn partners(&self) -> Vec<(usize, usize)> {
        if self.kind.uses_heuristics() {
            self.heuristic_agents.iter().copied().zip(self.heuristic_cycles.iter().copied()).collect()
        } else {
            Vec::new()
        }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Ppo(#[from] PpoError),
    #[error(transparent)]
    Mi(#[from] MiError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Table { path: PathBuf, message: String },
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
    #[error("unsupported request: {0}")]
    Unsupported(String),
    #[error("checkpoint {0} changed during an evaluation-only scenario")]
    CheckpointMutated(PathBuf),
}

impl HarnessError {
    /// Process exit status: 1 runtime, 2 configuration, 3 unsupported
    /// request, 4 missing artifacts.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Invalid(_) => 2,
            HarnessError::Mi(MiError::UnsupportedPairing(_)) | HarnessError::Unsupported(_) => 3,
            HarnessError::MissingArtifact(_) => 4,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> HarnessError {
        let path = path.into();
        move |source| HarnessError::Io { path, source }
    }

    pub(crate) fn table(path: impl Into<PathBuf>) -> impl FnOnce(csv::Error) -> HarnessError {
        let path = path.into();
        move |e| HarnessError::Table { path, message: e.to_string() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_validation() {
        let mut s = ScenarioSpec { kind: Scenario::TrainWithHeuristics, ..ScenarioSpec::default() };
        s.validate(4).unwrap();
        assert_eq!(s.partners(), vec![(2, 3), (3, 2)]);
        s.heuristic_cycles = vec![3];
        assert!(s.validate(4).is_err());
        s.heuristic_cycles = vec![3, 2];
        s.heuristic_agents = vec![2, 2];
        assert!(s.validate(4).is_err());
        s.heuristic_agents = vec![2, 4];
        assert!(s.validate(4).is_err());
        let homo = ScenarioSpec::default();
        assert!(homo.partners().is_empty());
    }

    #[test]
    fn exit_codes_are_stable() {
        assert_eq!(HarnessError::Invalid("x".into()).exit_code(), 2);
        assert_eq!(HarnessError::Unsupported("x".into()).exit_code(), 3);
        assert_eq!(HarnessError::Mi(MiError::UnsupportedPairing("x".into())).exit_code(), 3);
        assert_eq!(HarnessError::MissingArtifact("x".into()).exit_code(), 4);
        assert_eq!(HarnessError::Unsupported("x".into()).exit_code(), 3);
        assert_eq!(HarnessError::CheckpointMutated("a".into()).exit_code(), 1);
    }

    #[test]
    fn labels_round_trip() {
        for s in [Scenario::Homogeneous4, Scenario::ZeroShotHeuristicSwap, Scenario::TrainWithHeuristics] {
            assert_eq!(Scenario::from_label(s.label()), Some(s));
        }
    }
}
