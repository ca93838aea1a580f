//! Run configuration: typed TOML sections, include files, shipped presets
//! and `key=value` overrides, layered preset < file < command line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::{Table, Value};

use crate::env::{EnvConfig, ObservationMode};
use crate::harness::ScenarioSpec;
use crate::mi::{Units, DEFAULT_K};
use crate::nn::{Activation, Arch};
use crate::ppo::PpoConfig;

const PRESETS: &[(&str, &str)] = &[
    ("prediction-game-rnn", include_str!("../../presets/prediction-game-rnn.toml")),
    ("prediction-game-ff", include_str!("../../presets/prediction-game-ff.toml")),
    ("desk-rnn", include_str!("../../presets/desk-rnn.toml")),
    ("desk-ff", include_str!("../../presets/desk-ff.toml")),
    ("smoke", include_str!("../../presets/smoke.toml")),
];

/// Maximum include nesting.
const MAX_INCLUDE_DEPTH: usize = 16;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown preset `{0}` (available: {names})", names = preset_names().join(", "))]
    UnknownPreset(String),
    #[error("bad override `{0}`: {1}")]
    Override(String, String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("include nesting deeper than {MAX_INCLUDE_DEPTH} levels at {0}")]
    IncludeDepth(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvSection {
    pub n_agents: usize,
    pub n_actions: usize,
    pub episode_len: usize,
}

impl Default for EnvSection {
    fn default() -> Self {
        let e = EnvConfig::default();
        Self {
            n_agents: e.n_agents,
            n_actions: e.n_actions,
            episode_len: e.episode_len,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    pub arch: Arch,
    /// Width of every hidden layer (FF trunks, RNN embedding and state).
    pub hidden: usize,
    pub activation: Activation,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            arch: Arch::Ff,
            hidden: 128,
            activation: Activation::Relu,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MiConfig {
    /// Neighbour count for the kNN estimators.
    pub k: usize,
    pub units: Units,
    /// Also write hidden states into trajectory logs (large).
    pub log_hidden: bool,
}

impl Default for MiConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            units: Units::Bits,
            log_hidden: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// Output root; runs are written under `<out_dir>/runs/`.
    pub out_dir: String,
    pub master_seed: u64,
    /// Save intermediate checkpoints every this many updates (0: final only).
    pub checkpoint_every: usize,
    /// Update distinct agents on separate threads (bit-identical results).
    pub parallel_agents: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            out_dir: "out".into(),
            master_seed: 0,
            checkpoint_every: 0,
            parallel_agents: false,
        }
    }
}

/// Fully resolved configuration of one experiment family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Files merged underneath this one. Relative paths resolve against the
    /// including file; `preset:<name>` names a shipped preset.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub include: Vec<String>,
    pub env: EnvSection,
    pub network: NetworkConfig,
    pub ppo: PpoConfig,
    pub scenario: ScenarioSpec,
    pub mi: MiConfig,
    pub run: RunSection,
}

impl RunConfig {
    /// Defaults with the PPO column matching `arch`.
    pub fn for_arch(arch: Arch) -> Self {
        Self {
            network: NetworkConfig { arch, ..NetworkConfig::default() },
            ppo: PpoConfig::for_arch(arch),
            ..Self::default()
        }
    }

    pub fn env_config(&self, seed: u64) -> EnvConfig {
        EnvConfig {
            n_agents: self.env.n_agents,
            n_actions: self.env.n_actions,
            episode_len: self.env.episode_len,
            seed,
            observation: if self.scenario.blind { ObservationMode::Blind } else { ObservationMode::Sighted },
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.env_config(0).validate().map_err(|e| invalid(&e))?;
        self.ppo.validate_for(self.network.arch).map_err(|e| invalid(&e))?;
        self.scenario.validate(self.env.n_agents).map_err(|e| invalid(&e))?;
        if self.network.hidden == 0 {
            return Err(ConfigError::Invalid("network.hidden must be positive".into()));
        }
        if self.run.master_seed.checked_add(self.scenario.n_seeds as u64).is_none_or(|end| end > i64::MAX as u64) {
            return Err(ConfigError::Invalid("run.master_seed + scenario.n_seeds must fit in a signed 64-bit integer".into()));
        }
        if self.mi.k == 0 {
            return Err(ConfigError::Invalid("mi.k must be positive".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

pub fn preset_text(name: &str) -> Result<&'static str, ConfigError> {
    let name = name.strip_suffix(".toml").unwrap_or(name);
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| ConfigError::UnknownPreset(name.into()))
}

#[derive(Debug, Clone)]
enum Origin {
    Preset(String),
    File(PathBuf),
    Inline(String),
}

impl Origin {
    fn label(&self) -> String {
        match self {
            Origin::Preset(n) => format!("preset {n}"),
            Origin::File(p) => p.display().to_string(),
            Origin::Inline(n) => n.clone(),
        }
    }

    fn resolve(&self, include: &str) -> Origin {
        if let Some(name) = include.strip_prefix("preset:") {
            return Origin::Preset(name.into());
        }
        match self {
            Origin::Preset(_) => Origin::Preset(include.into()),
            Origin::File(p) => Origin::File(p.parent().unwrap_or(Path::new(".")).join(include)),
            Origin::Inline(_) => Origin::File(PathBuf::from(include)),
        }
    }
}

/// Parses and validates one layer, returning its raw table with includes
/// already merged underneath.
fn load_layer(text: &str, origin: &Origin, depth: usize) -> Result<Table, ConfigError> {
    if depth > MAX_INCLUDE_DEPTH {
        return Err(ConfigError::IncludeDepth(origin.label()));
    }
    let parse_err = |e: toml::de::Error| ConfigError::Parse {
        origin: origin.label(),
        message: e.to_string().trim_end().to_string(),
    };
    let typed: RunConfig = toml::from_str(text).map_err(parse_err)?;
    let mut table: Table = text.parse().map_err(parse_err)?;
    table.remove("include");
    let mut merged = Table::new();
    for inc in &typed.include {
        let child = origin.resolve(inc);
        let child_text = read_origin(&child)?;
        merge(&mut merged, load_layer(&child_text, &child, depth + 1)?);
    }
    merge(&mut merged, table);
    Ok(merged)
}

fn read_origin(origin: &Origin) -> Result<String, ConfigError> {
    match origin {
        Origin::Preset(n) => preset_text(n).map(str::to_string),
        Origin::File(p) => std::fs::read_to_string(p).map_err(|source| ConfigError::Io { path: p.clone(), source }),
        Origin::Inline(_) => unreachable!("inline layers are never re-read"),
    }
}

/// Deep merge; `overlay` wins on conflicts.
fn merge(base: &mut Table, overlay: Table) {
    for (k, v) in overlay {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Parses `section.key=value`; the value is read as TOML, falling back to a
/// bare string.
fn override_table(spec: &str) -> Result<Table, ConfigError> {
    let bad = |m: &str| ConfigError::Override(spec.into(), m.into());
    let (path, raw) = spec.split_once('=').ok_or_else(|| bad("expected key=value"))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(bad("empty key segment"));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.into()));
    let mut table = Table::new();
    let (last, parents) = keys.split_last().expect("non-empty path");
    let mut cursor = &mut table;
    for k in parents {
        cursor = cursor
            .entry(k.to_string())
            .or_insert_with(|| Value::Table(Table::new()))
            .as_table_mut()
            .expect("fresh table");
    }
    cursor.insert(last.to_string(), value);
    let check: Result<RunConfig, _> = Value::Table(table.clone()).try_into();
    check.map_err(|e| bad(e.to_string().trim_end()))?;
    Ok(table)
}

fn finish(layers: Table) -> Result<RunConfig, ConfigError> {
    let arch: Arch = layers
        .get("network")
        .and_then(|n| n.get("arch"))
        .cloned()
        .map(Value::try_into)
        .transpose()
        .map_err(|e: toml::de::Error| ConfigError::Invalid(e.to_string()))?
        .unwrap_or_default();
    let mut resolved: Table = Table::try_from(RunConfig::for_arch(arch)).expect("defaults serialize");
    merge(&mut resolved, layers);
    let cfg: RunConfig = Value::Table(resolved)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::Invalid(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Resolves preset < file < overrides into a validated configuration.
/// PPO defaults follow the resolved architecture.
pub fn load(preset: Option<&str>, file: Option<&Path>, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut layers = Table::new();
    if let Some(name) = preset {
        let origin = Origin::Preset(name.into());
        merge(&mut layers, load_layer(preset_text(name)?, &origin, 0)?);
    }
    if let Some(path) = file {
        let origin = Origin::File(path.to_path_buf());
        merge(&mut layers, load_layer(&read_origin(&origin)?, &origin, 0)?);
    }
    for o in overrides {
        merge(&mut layers, override_table(o)?);
    }
    finish(layers)
}

/// Parses a configuration held in memory. Relative includes resolve
/// against the working directory.
pub fn parse_str(text: &str, origin: &str) -> Result<RunConfig, ConfigError> {
    finish(load_layer(text, &Origin::Inline(origin.into()), 0)?)
}
