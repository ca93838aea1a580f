//! Mutual information between what an agent sees (or remembers) and what it
//! does: exact plug-in for discrete pairs, KSG for continuous pairs, and the
//! Ross estimator for continuous states against discrete actions.

mod collect;
pub(crate) mod digamma;
mod ksg;
pub mod neighbors;
mod plugin;
mod report;
mod ross;

pub use collect::{collect_mi_samples, record_episodes, sample_set, ActionMode, Pairing, TrajectoryLog, TrajectoryStep};
pub use digamma::digamma;
pub use ksg::mi_ksg;
pub use plugin::{mi_plugin, plugin_entropy};
pub use report::{mi_report, read_trajectory_csv, write_mi_report_csv, write_trajectory_csv, MiReport, MiReportRow};
pub use ross::{drop_rare_classes, mi_ross};

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::SimRng;

/// Default neighbour count for both kNN estimators.
pub const DEFAULT_K: usize = 3;
/// Relative tie-breaking jitter applied before neighbour search.
pub const JITTER_SCALE: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum MiError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("class {class} has {count} samples; the estimator needs more than k = {k}")]
    InsufficientClass { class: u64, count: usize, k: usize },
    #[error("k = {k} must satisfy 1 <= k < n = {n}")]
    InvalidK { k: usize, n: usize },
    #[error("degenerate samples: {0}")]
    Degenerate(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("unsupported pairing: {0}")]
    UnsupportedPairing(String),
    #[error("mixed units in report")]
    MixedUnits,
    #[error("trajectory log: {0}")]
    Log(String),
    #[error(transparent)]
    Env(#[from] crate::env::EnvError),
    #[error(transparent)]
    Nn(#[from] crate::nn::NnError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Nats,
    #[default]
    Bits,
}

impl Units {
    pub fn label(self) -> &'static str {
        match self {
            Units::Nats => "nats",
            Units::Bits => "bits",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    #[serde(rename = "plugin")]
    PlugIn,
    Ksg,
    Ross,
}

impl Estimator {
    pub fn label(self) -> &'static str {
        match self {
            Estimator::PlugIn => "plugin",
            Estimator::Ksg => "ksg",
            Estimator::Ross => "ross",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MIEstimate {
    pub value: f64,
    pub units: Units,
    pub estimator: Estimator,
    /// Neighbour count for kNN estimators.
    pub k: Option<usize>,
    pub n: usize,
}

impl MIEstimate {
    pub fn nats(value: f64, estimator: Estimator, k: Option<usize>, n: usize) -> Self {
        Self { value, units: Units::Nats, estimator, k, n }
    }

    pub fn in_nats(&self) -> f64 {
        match self.units {
            Units::Nats => self.value,
            Units::Bits => self.value * std::f64::consts::LN_2,
        }
    }

    pub fn bits(&self) -> f64 {
        self.in_nats() / std::f64::consts::LN_2
    }

    pub fn to(self, units: Units) -> Self {
        let value = match units {
            Units::Nats => self.in_nats(),
            Units::Bits => self.bits(),
        };
        Self { value, units, ..self }
    }
}

/// One side of a paired sample.
#[derive(Debug, Clone, PartialEq)]
pub enum Variable {
    Discrete(Vec<u64>),
    /// Row-major `[n, dim]`.
    Continuous { dim: usize, data: Vec<f64> },
}

impl Variable {
    pub fn len(&self) -> usize {
        match self {
            Variable::Discrete(s) => s.len(),
            Variable::Continuous { dim, data } => data.len() / (*dim).max(1),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Variable::Discrete(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleKind {
    DiscreteDiscrete,
    ContinuousDiscrete,
    ContinuousContinuous,
}

/// Paired draws of `(X, Y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub x: Variable,
    pub y: Variable,
}

impl SampleSet {
    pub fn new(x: Variable, y: Variable) -> Result<Self, MiError> {
        for v in [&x, &y] {
            if let Variable::Continuous { dim, data } = v {
                if *dim == 0 || data.len() % dim != 0 {
                    return Err(MiError::Shape(format!("{} values do not form rows of {dim}", data.len())));
                }
            }
        }
        if x.len() != y.len() {
            return Err(MiError::Shape(format!("{} x samples vs {} y samples", x.len(), y.len())));
        }
        if x.len() < 2 {
            return Err(MiError::InsufficientData(format!("need at least 2 samples, got {}", x.len())));
        }
        Ok(Self { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn kind(&self) -> SampleKind {
        match (self.x.is_discrete(), self.y.is_discrete()) {
            (true, true) => SampleKind::DiscreteDiscrete,
            (false, false) => SampleKind::ContinuousContinuous,
            _ => SampleKind::ContinuousDiscrete,
        }
    }

    /// Routes to plug-in, Ross or KSG by sample kind.
    pub fn estimate(&self, k: usize, seed: u64) -> Result<MIEstimate, MiError> {
        use Variable::*;
        match (&self.x, &self.y) {
            (Discrete(x), Discrete(y)) => mi_plugin(x, y),
            (Continuous { dim, data }, Discrete(y)) | (Discrete(y), Continuous { dim, data }) => {
                mi_ross(data, *dim, y, k, seed)
            }
            (Continuous { dim: dx, data: x }, Continuous { dim: dy, data: y }) => mi_ksg(x, *dx, y, *dy, k, seed),
        }
    }
}

/// Copy of `data: [n, dim]` with seeded uniform noise of
/// `JITTER_SCALE ×` each dimension's range (or absolute for constant
/// dimensions) added to every coordinate.
pub fn jittered(data: &[f64], dim: usize, seed: u64) -> Vec<f64> {
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for row in data.chunks_exact(dim) {
        for (d, &v) in row.iter().enumerate() {
            lo[d] = lo[d].min(v);
            hi[d] = hi[d].max(v);
        }
    }
    let scale: Vec<f64> = lo
        .iter()
        .zip(&hi)
        .map(|(l, h)| JITTER_SCALE * if h > l { h - l } else { 1.0 })
        .collect();
    let mut rng = SimRng::seed_from_u64(seed);
    data.chunks_exact(dim)
        .flat_map(|row| {
            row.iter()
                .zip(&scale)
                .map(|(&v, s)| v + s * rng.random_range(-1.0..1.0))
                .collect::<Vec<_>>()
        })
        .collect()
}
