//! Snapshot persistence: `run_<hash>.csv` (t, r_center, u) plus a JSON sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::grid::{GridParams, RadialGrid};
use super::integrator::SolverConfig;
use super::state::{FieldState, RunStats, SnapshotSeries, TimeSchedule, TracePoint};
use crate::error::{Error, Result};
use crate::model::ModelSpec;

/// Everything that determines a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub spec: ModelSpec,
    pub grid: GridParams,
    pub k: f64,
    pub rho: f64,
    pub schedule: TimeSchedule,
    pub solver: SolverConfig,
}

impl RunConfig {
    /// First 16 hex digits of the SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        hex::encode(digest)[..16].to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub final_t: f64,
    pub initial_mass: f64,
    pub final_mass: f64,
    pub final_max_u: f64,
    pub stats: RunStats,
}

impl TraceSummary {
    pub fn of(series: &SnapshotSeries) -> Self {
        let first = series.traces.first();
        let last = series.traces.last();
        TraceSummary {
            final_t: last.map_or(0.0, |t| t.t),
            initial_mass: first.map_or(0.0, |t| t.mass),
            final_mass: last.map_or(0.0, |t| t.mass),
            final_max_u: last.map_or(0.0, |t| t.max_u),
            stats: series.stats.clone(),
        }
    }
}

/// Contents of `run_<hash>.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub hash: String,
    #[serde(flatten)]
    pub config: RunConfig,
    pub trace_summary: TraceSummary,
    pub boundary_mass_fraction: f64,
    pub truncation_ok: bool,
    pub failure: Option<String>,
    pub probes: Vec<f64>,
    pub traces: Vec<TracePoint>,
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub struct RunPaths {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub hash: String,
}

pub fn write_run(series: &SnapshotSeries, config: &RunConfig, dir: &Path) -> Result<RunPaths> {
    fs::create_dir_all(dir)?;
    let hash = config.hash();
    let csv_path = dir.join(format!("run_{hash}.csv"));
    let json_path = dir.join(format!("run_{hash}.json"));
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record(["t", "r_center", "u"])?;
    for s in &series.snapshots {
        let t = fmt_f64(s.t);
        for (r, u) in series.grid.centers.iter().zip(&s.values) {
            w.write_record([t.as_str(), &fmt_f64(*r), &fmt_f64(*u)])?;
        }
    }
    w.flush()?;
    let record = RunRecord {
        hash: hash.clone(),
        config: config.clone(),
        trace_summary: TraceSummary::of(series),
        boundary_mass_fraction: series.boundary_mass_fraction,
        truncation_ok: series.truncation_ok(),
        failure: series.failure.clone(),
        probes: series.probes.clone(),
        traces: series.traces.clone(),
    };
    fs::write(&json_path, serde_json::to_string_pretty(&record)?)?;
    Ok(RunPaths { csv: csv_path, json: json_path, hash })
}

pub fn read_record(json_path: &Path) -> Result<RunRecord> {
    Ok(serde_json::from_str(&fs::read_to_string(json_path)?)?)
}

/// Rebuilds a series from its sidecar; the CSV is found next to it.
pub fn read_run(json_path: &Path) -> Result<(SnapshotSeries, RunRecord)> {
    let record = read_record(json_path)?;
    let grid = RadialGrid::from_params(record.config.spec.dim_n, &record.config.grid)?;
    let csv_path = json_path.with_extension("csv");
    let mut rdr = csv::Reader::from_path(&csv_path)?;
    let n = grid.n_cells();
    let mut snapshots: Vec<FieldState> = Vec::new();
    let mut current: Vec<f64> = Vec::with_capacity(n);
    let mut current_t = f64::NAN;
    for row in rdr.records() {
        let row = row?;
        let parse = |i: usize| -> Result<f64> {
            row.get(i)
                .ok_or_else(|| Error::Config(format!("{}: short row", csv_path.display())))?
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("{}: {e}", csv_path.display())))
        };
        let t = parse(0)?;
        if t != current_t && !current.is_empty() {
            snapshots.push(FieldState::new(current_t, std::mem::take(&mut current), &grid)?);
        }
        current_t = t;
        current.push(parse(2)?);
    }
    if !current.is_empty() {
        snapshots.push(FieldState::new(current_t, current, &grid)?);
    }
    let series = SnapshotSeries {
        spec: record.config.spec,
        grid,
        k: record.config.k,
        rho: record.config.rho,
        snapshots,
        probes: record.probes.clone(),
        traces: record.traces.clone(),
        stats: record.trace_summary.stats.clone(),
        boundary_mass_fraction: record.boundary_mass_fraction,
        failure: record.failure.clone(),
    };
    Ok((series, record))
}
