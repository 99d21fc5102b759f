use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Scenario;
use crate::error::{Error, Result};
use crate::model::existence_check;
use crate::solver::io::{read_run, write_run, TraceSummary};
use crate::solver::{SnapshotSeries, Solver};

pub const MANIFEST_FILE: &str = "sweep_manifest.json";

/// Outcome of one `k`: a series (possibly truncated by a failure) or only a failure.
#[derive(Debug, Clone)]
pub struct SweepRun {
    pub k: f64,
    pub series: Option<SnapshotSeries>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRun {
    pub k: f64,
    pub rho: f64,
    pub hash: String,
    pub csv: Option<String>,
    pub json: Option<String>,
    pub trace_summary: Option<TraceSummary>,
    pub truncation_ok: Option<bool>,
    pub failure: Option<String>,
}

/// Existence verdict as stored in the manifest; non-finite values become `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExistenceSummary {
    pub satisfied: bool,
    pub value: Option<f64>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario: Scenario,
    pub existence: ExistenceSummary,
    pub runs: Vec<ManifestRun>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub runs: Vec<SweepRun>,
    pub manifest: Manifest,
}

impl SweepOutcome {
    /// Series of the runs that completed without failure, in `k` order.
    pub fn completed(&self) -> Vec<SnapshotSeries> {
        self.runs
            .iter()
            .filter(|r| r.failure.is_none())
            .filter_map(|r| r.series.clone())
            .collect()
    }
}

/// Runs every `k` of the scenario on the shared grid with at most `threads` workers
/// (0 means the rayon default). With `out_dir`, writes per-run files and the manifest.
pub fn sweep_k(scenario: &Scenario, out_dir: Option<&Path>, threads: usize) -> Result<SweepOutcome> {
    scenario.validate()?;
    let existence = existence_check(&scenario.spec);
    if !existence.satisfied {
        warn!("existence check not satisfied: {}", existence.note);
    }
    let existence = ExistenceSummary {
        satisfied: existence.satisfied,
        value: Some(existence.value).filter(|v| v.is_finite()),
        note: existence.note,
    };
    let grid = scenario.build_grid()?;
    let params = grid.params();
    let schedule = scenario.run_schedule();
    let solver = Solver::new(scenario.spec, grid, scenario.run_solver())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<(SweepRun, ManifestRun)> = pool.install(|| {
        scenario
            .k_list
            .par_iter()
            .map(|&k| {
                let config = scenario.run_config(&params, k);
                let entry = ManifestRun {
                    k,
                    rho: config.rho,
                    hash: config.hash(),
                    csv: None,
                    json: None,
                    trace_summary: None,
                    truncation_ok: None,
                    failure: None,
                };
                let outcome = solver.run(k, config.rho, &schedule);
                finish(k, outcome, entry, &config, out_dir)
            })
            .collect()
    });
    let (runs, entries): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let manifest = Manifest { scenario: scenario.clone(), existence, runs: entries };
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?)?;
    }
    Ok(SweepOutcome { runs, manifest })
}

fn finish(
    k: f64,
    outcome: Result<SnapshotSeries>,
    mut entry: ManifestRun,
    config: &crate::solver::io::RunConfig,
    out_dir: Option<&Path>,
) -> (SweepRun, ManifestRun) {
    let series = match outcome {
        Ok(s) => s,
        Err(e) => {
            warn!("k={k}: {e}");
            entry.failure = Some(e.to_string());
            return (SweepRun { k, series: None, failure: entry.failure.clone() }, entry);
        }
    };
    entry.trace_summary = Some(TraceSummary::of(&series));
    entry.truncation_ok = Some(series.truncation_ok());
    entry.failure = series.failure.clone();
    if let Some(dir) = out_dir {
        match write_run(&series, config, dir) {
            Ok(paths) => {
                entry.csv = file_name(&paths.csv);
                entry.json = file_name(&paths.json);
            }
            Err(e) => {
                warn!("k={k}: could not write run files: {e}");
                entry.failure.get_or_insert_with(|| format!("write failed: {e}"));
            }
        }
    }
    info!("k={k} done: {} steps, failure={:?}", series.stats.steps, entry.failure);
    let failure = entry.failure.clone();
    (SweepRun { k, series: Some(series), failure }, entry)
}

fn file_name(p: &Path) -> Option<String> {
    p.file_name().map(|s| s.to_string_lossy().into_owned())
}

/// Reads a manifest and the completed runs it lists, in `k` order.
pub fn load_sweep(manifest_path: &Path) -> Result<(Manifest, Vec<SnapshotSeries>)> {
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(manifest_path)?)?;
    let dir: PathBuf = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut series = Vec::new();
    for run in &manifest.runs {
        if run.failure.is_some() {
            continue;
        }
        if let Some(json) = &run.json {
            series.push(read_run(&dir.join(json))?.0);
        }
    }
    Ok((manifest, series))
}
