use std::path::{Path, PathBuf};

use super::{HarnessError, Scenario};
use crate::nn::Arch;

/// `ff`, `rnn`, `ff_blind`, `rnn_blind`.
pub fn variant_label(arch: Arch, blind: bool) -> String {
    if blind {
        format!("{}_blind", arch.label())
    } else {
        arch.label().to_string()
    }
}

pub fn run_dir(out: &Path, scenario: Scenario, arch: Arch, blind: bool, seed: u64) -> PathBuf {
    out.join("runs").join(scenario.label()).join(variant_label(arch, blind)).join(seed.to_string())
}

/// Files of one seed's run. `results.csv` is written last and marks the
/// run complete.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunDir {
    pub root: PathBuf,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn config(&self) -> PathBuf {
        self.root.join("config.toml")
    }

    pub fn metrics(&self) -> PathBuf {
        self.root.join("metrics.csv")
    }

    pub fn checkpoints(&self) -> PathBuf {
        self.root.join("checkpoints")
    }

    pub fn checkpoint(&self, agent: usize) -> PathBuf {
        self.checkpoints().join(format!("agent_{agent}.ckpt"))
    }

    pub fn interval_checkpoint(&self, update: usize, agent: usize) -> PathBuf {
        self.checkpoints().join(format!("update_{update}")).join(format!("agent_{agent}.ckpt"))
    }

    pub fn trajectories(&self) -> PathBuf {
        self.root.join("trajectories.csv")
    }

    pub fn histogram(&self) -> PathBuf {
        self.root.join("histogram.csv")
    }

    pub fn mi_report(&self) -> PathBuf {
        self.root.join("mi_report.csv")
    }

    pub fn mi_meta(&self) -> PathBuf {
        self.root.join("mi_report_meta.txt")
    }

    pub fn baseline_manifest(&self) -> PathBuf {
        self.root.join("baseline_checkpoints.txt")
    }

    pub fn results(&self) -> PathBuf {
        self.root.join("results.csv")
    }

    pub fn is_complete(&self) -> bool {
        self.results().is_file()
    }

    /// A fresh, unused file name `<stem>_<unix-nanos>.csv` for reports
    /// added to a finished run.
    pub fn timestamped(&self, stem: &str) -> PathBuf {
        let nanos = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_nanos());
        let mut path = self.root.join(format!("{stem}_{nanos}.csv"));
        let mut bump = 1;
        while path.exists() {
            path = self.root.join(format!("{stem}_{nanos}_{bump}.csv"));
            bump += 1;
        }
        path
    }

    /// Removes any previous contents and recreates the directory tree.
    pub(crate) fn prepare(&self) -> Result<(), HarnessError> {
        if self.root.exists() {
            std::fs::remove_dir_all(&self.root).map_err(HarnessError::io(&self.root))?;
        }
        std::fs::create_dir_all(self.checkpoints()).map_err(HarnessError::io(self.checkpoints()))
    }
}
