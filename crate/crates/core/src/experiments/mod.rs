//! Scenario configuration, k-sweeps, blow-up classification and the subsolution floor.

mod classify;
mod floor;
mod sweep;

use serde::{Deserialize, Serialize};

pub use classify::{
    classify_blowup, ClassificationVerdict, DecayEvidence, Evidence, FloorEvidence, RatioEvidence, TailEvidence, TailPoint,
    Verdict,
};
pub use floor::{floor_profile_problem, ln_subsolution_floor, subsolution_floor, FLOOR_POWER};
pub use sweep::{load_sweep, sweep_k, ExistenceSummary, Manifest, ManifestRun, SweepOutcome, SweepRun, MANIFEST_FILE};

use crate::error::{domain, Error, Result};
use crate::model::ModelSpec;
use crate::solver::io::RunConfig;
use crate::solver::{default_rho, GridParams, RadialGrid, SolverConfig, TimeSchedule};

/// Support radius of the initial bump as a function of `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum RhoRule {
    /// `min(0.02, 1/k)`.
    #[default]
    Default,
    Fixed { rho: f64 },
}

impl RhoRule {
    pub fn rho(&self, k: f64) -> f64 {
        match *self {
            RhoRule::Default => default_rho(k),
            RhoRule::Fixed { rho } => rho,
        }
    }
}

/// Shared radial grid of a sweep. Without `stretch`, the grid is refined near the origin
/// until `min_support_cells` cells fit inside the smallest initial support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub radius: f64,
    pub n_cells: usize,
    #[serde(default)]
    pub stretch: Option<f64>,
    #[serde(default = "default_support_cells")]
    pub min_support_cells: usize,
}

fn default_support_cells() -> usize {
    4
}

/// Classifier thresholds. The defaults are heuristics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Smallest extrapolated `u_k/U_h` accepted as complete blow-up.
    pub complete_limit: f64,
    /// Largest tail ratio `value(k_max)/value(k_mid)` accepted as stabilized.
    pub stabilization: f64,
    /// `u_{k_max}` must exceed this fraction of the subsolution floor.
    pub floor_fraction: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { complete_limit: 0.8, stabilization: 1.15, floor_fraction: 1e-2 }
    }
}

/// Subsolution floor check for complete blow-up verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FloorCheck {
    /// Profile lower-bound constant, see [`floor_profile_problem`].
    pub constant: f64,
    pub epsilon: f64,
}

/// One JSON document describing a k-sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub spec: ModelSpec,
    pub grid: GridSpec,
    pub k_list: Vec<f64>,
    #[serde(default)]
    pub rho: RhoRule,
    pub schedule: TimeSchedule,
    #[serde(default)]
    pub probes: Vec<f64>,
    #[serde(default)]
    pub t_probe_list: Vec<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub floor: Option<FloorCheck>,
}

fn default_delta() -> f64 {
    0.25
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.schedule.validate().map_err(|e| Error::Config(e.to_string()))?;
        let cfg = |m: String| Err(Error::Config(m));
        if self.k_list.len() < 3 {
            return cfg(format!("k_list needs at least 3 entries, got {}", self.k_list.len()));
        }
        if self.k_list.iter().any(|k| !(*k > 0.0 && k.is_finite())) {
            return cfg("k_list entries must be positive and finite".into());
        }
        if self.k_list.windows(2).any(|w| !(w[1] > w[0])) {
            return cfg("k_list must be strictly increasing".into());
        }
        if self.t_probe_list.windows(2).any(|w| !(w[1] < w[0])) {
            return cfg("t_probe_list must be strictly decreasing".into());
        }
        let (t0, t1) = (self.schedule.t_start, self.schedule.t_end);
        if let Some(t) = self.t_probe_list.iter().find(|t| !(**t > t0 && **t <= t1)) {
            return cfg(format!("t_probe {t} outside the schedule coverage ({t0}, {t1}]"));
        }
        let r = self.grid.radius;
        if !(r > 0.0) || self.grid.n_cells < 2 {
            return cfg(format!("grid needs R > 0 and at least 2 cells, got R={r}, n={}", self.grid.n_cells));
        }
        if let Some(p) = self.probes.iter().find(|p| !(**p > 0.0 && **p < r)) {
            return cfg(format!("probe radius {p} must lie in (0, {r})"));
        }
        if !(self.delta >= 0.0 && self.delta < r) {
            return cfg(format!("delta = {} must lie in [0, {r})", self.delta));
        }
        if let RhoRule::Fixed { rho } = self.rho {
            if !(rho > 0.0 && rho < r) {
                return cfg(format!("fixed rho = {rho} must lie in (0, {r})"));
            }
        }
        let th = self.thresholds;
        if !(th.complete_limit > 0.0 && th.stabilization >= 1.0 && th.floor_fraction > 0.0) {
            return cfg(format!("invalid thresholds {th:?}"));
        }
        Ok(())
    }

    /// The grid shared by every run of the sweep.
    pub fn build_grid(&self) -> Result<RadialGrid> {
        let g = self.grid;
        let n = self.spec.dim_n;
        match g.stretch {
            Some(s) => RadialGrid::stretched(n, g.radius, g.n_cells, s),
            None => {
                let rho_min = self.k_list.iter().map(|&k| self.rho.rho(k)).fold(f64::INFINITY, f64::min);
                RadialGrid::refined_for_support(n, g.radius, g.n_cells, rho_min, g.min_support_cells)
            }
        }
    }

    /// The schedule with every probe time added to the snapshot times.
    pub fn run_schedule(&self) -> TimeSchedule {
        let mut s = self.schedule.clone();
        s.snapshot_times.extend(self.t_probe_list.iter().copied());
        s.snapshot_times.sort_by(f64::total_cmp);
        s.snapshot_times.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
        s
    }

    /// Solver configuration with the scenario probes traced.
    pub fn run_solver(&self) -> SolverConfig {
        let mut c = self.solver.clone();
        for &p in &self.probes {
            if !c.probes.contains(&p) {
                c.probes.push(p);
            }
        }
        c
    }

    pub fn run_config(&self, grid: &GridParams, k: f64) -> RunConfig {
        RunConfig {
            spec: self.spec,
            grid: *grid,
            k,
            rho: self.rho.rho(k),
            schedule: self.run_schedule(),
            solver: self.run_solver(),
        }
    }

    /// Probe radius must lie inside the grid.
    pub(crate) fn check_probes(&self, radius: f64) -> Result<()> {
        match self.probes.iter().find(|p| !(**p > 0.0 && **p <= radius)) {
            Some(p) => Err(domain(format!("probe {p} outside the grid (0, {radius}]"))),
            None => Ok(()),
        }
    }
}
