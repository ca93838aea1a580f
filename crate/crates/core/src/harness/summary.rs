use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::bootstrap::{bootstrap_ci, DEFAULT_RESAMPLES};
use super::runner::ResultRow;
use super::{HarnessError, Scenario};

/// One aggregated metric of one variant, over its seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub arch: String,
    pub blind: bool,
    pub metric: String,
    pub mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n_seeds: usize,
}

/// Training-curve point: mean rollout return at one update, over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub scenario: String,
    pub arch: String,
    pub blind: bool,
    pub update: usize,
    pub env_steps: u64,
    pub mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n_seeds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOutput {
    pub n_runs: usize,
    pub summary: Vec<SummaryRow>,
    pub summary_path: PathBuf,
    pub results_path: PathBuf,
    pub curves_path: PathBuf,
}

const LEVEL: f64 = 0.95;
const BOOTSTRAP_SEED: u64 = 0;

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>, HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(HarnessError::table(path))?;
    r.deserialize().collect::<Result<_, _>>().map_err(HarnessError::table(path))
}

fn sorted_subdirs(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(HarnessError::io(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    out.sort();
    Ok(out)
}

/// Complete runs under `runs/`, ordered by scenario, variant and seed.
fn completed_runs(runs: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut found = Vec::new();
    for scenario in sorted_subdirs(runs)? {
        for variant in sorted_subdirs(&scenario)? {
            let mut seeds: Vec<(u64, PathBuf)> = sorted_subdirs(&variant)?
                .into_iter()
                .filter_map(|p| Some((p.file_name()?.to_str()?.parse().ok()?, p)))
                .filter(|(_, p): &(u64, PathBuf)| p.join("results.csv").is_file())
                .collect();
            seeds.sort();
            found.extend(seeds.into_iter().map(|(_, p)| p));
        }
    }
    Ok(found)
}

type VariantKey = (usize, String, bool);

fn variant_key(scenario: &str, arch: &str, blind: bool) -> VariantKey {
    let order = Scenario::from_label(scenario).map_or(usize::MAX, |s| s as usize);
    (order, arch.to_string(), blind)
}

/// Aggregates every complete run under `<root>/runs` (or `root` itself if
/// it is the `runs` directory) into `summary.csv`, `results.csv` and
/// `curves.csv` next to the runs directory. Output bytes depend only on
/// the runs' contents.
pub fn report(root: &Path) -> Result<ReportOutput, HarnessError> {
    let (runs, out) = if root.join("runs").is_dir() {
        (root.join("runs"), root.to_path_buf())
    } else if root.file_name().is_some_and(|n| n == "runs") && root.is_dir() {
        (root.to_path_buf(), root.parent().unwrap_or(Path::new(".")).to_path_buf())
    } else {
        return Err(HarnessError::MissingArtifact(format!("no runs directory under {}", root.display())));
    };
    let dirs = completed_runs(&runs)?;
    if dirs.is_empty() {
        return Err(HarnessError::MissingArtifact(format!("no completed runs under {}", runs.display())));
    }

    let mut all = Vec::new();
    let mut groups: BTreeMap<(VariantKey, String), (String, Vec<f64>)> = BTreeMap::new();
    let mut curves: BTreeMap<VariantKey, (String, BTreeMap<usize, (u64, Vec<f64>)>)> = BTreeMap::new();
    for dir in &dirs {
        let rows = read_results(&dir.join("results.csv"))?;
        for r in &rows {
            let key = (variant_key(&r.scenario, &r.arch, r.blind), r.metric.clone());
            groups.entry(key).or_insert_with(|| (r.scenario.clone(), Vec::new())).1.push(r.value);
        }
        if let (Some(first), true) = (rows.first(), dir.join("metrics.csv").is_file()) {
            let entry = curves
                .entry(variant_key(&first.scenario, &first.arch, first.blind))
                .or_insert_with(|| (first.scenario.clone(), BTreeMap::new()));
            read_curve(&dir.join("metrics.csv"), &mut entry.1)?;
        }
        all.extend(rows);
    }

    let mut summary = Vec::new();
    for (((_, arch, blind), metric), (scenario, values)) in &groups {
        let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        if finite.is_empty() {
            continue;
        }
        let ci = bootstrap_ci(&finite, LEVEL, DEFAULT_RESAMPLES, BOOTSTRAP_SEED)?;
        summary.push(SummaryRow {
            scenario: scenario.clone(),
            arch: arch.clone(),
            blind: *blind,
            metric: metric.clone(),
            mean: ci.mean,
            ci_lo: ci.lo,
            ci_hi: ci.hi,
            n_seeds: finite.len(),
        });
    }
    let mut curve_rows = Vec::new();
    for ((_, arch, blind), (scenario, points)) in &curves {
        for (&update, (env_steps, values)) in points {
            let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
            if finite.is_empty() {
                continue;
            }
            let ci = bootstrap_ci(&finite, LEVEL, DEFAULT_RESAMPLES, BOOTSTRAP_SEED)?;
            curve_rows.push(CurveRow {
                scenario: scenario.clone(),
                arch: arch.clone(),
                blind: *blind,
                update,
                env_steps: *env_steps,
                mean: ci.mean,
                ci_lo: ci.lo,
                ci_hi: ci.hi,
                n_seeds: finite.len(),
            });
        }
    }

    let summary_path = out.join("summary.csv");
    let results_path = out.join("results.csv");
    let curves_path = out.join("curves.csv");
    write_rows(&summary_path, &summary)?;
    write_rows(&results_path, &all)?;
    write_rows(&curves_path, &curve_rows)?;
    Ok(ReportOutput { n_runs: dirs.len(), summary, summary_path, results_path, curves_path })
}

#[derive(Deserialize)]
struct CurvePoint {
    update: usize,
    env_steps: u64,
    mean_return: f64,
}

fn read_curve(path: &Path, into: &mut BTreeMap<usize, (u64, Vec<f64>)>) -> Result<(), HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(HarnessError::table(path))?;
    for p in r.deserialize::<CurvePoint>() {
        let p = p.map_err(HarnessError::table(path))?;
        into.entry(p.update).or_insert((p.env_steps, Vec::new())).1.push(p.mean_return);
    }
    Ok(())
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(HarnessError::table(path))?;
    for r in rows {
        w.serialize(r).map_err(HarnessError::table(path))?;
    }
    w.flush().map_err(HarnessError::io(path))
}
