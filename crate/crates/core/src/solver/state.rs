use serde::{Deserialize, Serialize};

use super::grid::RadialGrid;
use crate::error::{domain, Error, Result};
use crate::model::ModelSpec;

/// Cell averages of `u(·, t)` with their cached mass.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub t: f64,
    pub values: Vec<f64>,
    pub mass: f64,
}

impl FieldState {
    pub fn new(t: f64, values: Vec<f64>, grid: &RadialGrid) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(domain(format!(
                "state has {} values for a grid of {} cells",
                values.len(),
                grid.n_cells()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(domain(format!("state value {bad} is not a finite nonnegative number")));
        }
        let mass = grid.integrate(&values);
        Ok(FieldState { t, values, mass })
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepMode {
    Geometric { ratio: f64, n_steps: usize },
    Fixed { dt: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSchedule {
    pub t_start: f64,
    pub t_end: f64,
    pub mode: StepMode,
    pub snapshot_times: Vec<f64>,
}

impl TimeSchedule {
    pub fn geometric(t_start: f64, t_end: f64, ratio: f64, n_steps: usize, snapshot_times: Vec<f64>) -> Self {
        TimeSchedule { t_start, t_end, mode: StepMode::Geometric { ratio, n_steps }, snapshot_times }
    }

    pub fn fixed(t_start: f64, t_end: f64, dt: f64, snapshot_times: Vec<f64>) -> Self {
        TimeSchedule { t_start, t_end, mode: StepMode::Fixed { dt }, snapshot_times }
    }

    /// `n` geometrically spaced snapshot times per decade on `[t_lo, t_hi]`, both ends included.
    pub fn log_spaced(t_lo: f64, t_hi: f64, per_decade: usize) -> Vec<f64> {
        let decades = (t_hi / t_lo).log10();
        let n = ((decades * per_decade as f64).ceil() as usize).max(1);
        (0..=n)
            .map(|i| if i == n { t_hi } else { t_lo * 10f64.powf(decades * i as f64 / n as f64) })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_start >= 0.0) || !(self.t_end > self.t_start) {
            return Err(Error::Config(format!(
                "schedule needs 0 <= t_start < t_end, got [{}, {}]",
                self.t_start, self.t_end
            )));
        }
        match self.mode {
            StepMode::Geometric { ratio, n_steps } => {
                if !(ratio > 1.0) || n_steps == 0 {
                    return Err(Error::Config("geometric schedule needs ratio > 1 and n_steps >= 1".into()));
                }
            }
            StepMode::Fixed { dt } => {
                if !(dt > 0.0) {
                    return Err(Error::Config("fixed schedule needs dt > 0".into()));
                }
            }
        }
        if self.snapshot_times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("snapshot times must be strictly increasing".into()));
        }
        if self.snapshot_times.iter().any(|&s| s <= self.t_start || s > self.t_end) {
            return Err(Error::Config("snapshot times must lie in (t_start, t_end]".into()));
        }
        Ok(())
    }

    /// First step of the nominal sequence.
    pub fn dt0(&self) -> f64 {
        match self.mode {
            StepMode::Geometric { ratio, n_steps } => {
                (self.t_end - self.t_start) * (ratio - 1.0) / (ratio.powi(n_steps as i32) - 1.0)
            }
            StepMode::Fixed { dt } => dt,
        }
    }

    /// Nominal step at time `t`; the geometric sequence satisfies `dt_n = dt0 + (ratio − 1)(t_n − t_start)`.
    pub fn nominal_dt(&self, t: f64) -> f64 {
        match self.mode {
            StepMode::Geometric { ratio, .. } => self.dt0() + (ratio - 1.0) * (t - self.t_start),
            StepMode::Fixed { dt } => dt,
        }
    }
}

/// Per-step record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: f64,
    pub mass: f64,
    pub max_u: f64,
    pub u_at_probes: Vec<f64>,
}

/// Step statistics accumulated over a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub steps: usize,
    pub newton_iterations: usize,
    pub clamps: usize,
    pub halvings: usize,
}

/// The map `t ↦ u_k(·, t)` sampled at snapshot times.
#[derive(Debug, Clone)]
pub struct SnapshotSeries {
    pub spec: ModelSpec,
    pub grid: RadialGrid,
    pub k: f64,
    pub rho: f64,
    pub snapshots: Vec<FieldState>,
    pub probes: Vec<f64>,
    pub traces: Vec<TracePoint>,
    pub stats: RunStats,
    /// Largest fraction of mass found in the outermost 5% of the ball.
    pub boundary_mass_fraction: f64,
    pub failure: Option<String>,
}

pub const BOUNDARY_MASS_LIMIT: f64 = 1e-6;

impl SnapshotSeries {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn truncation_ok(&self) -> bool {
        self.boundary_mass_fraction < BOUNDARY_MASS_LIMIT
    }

    /// Snapshot at exactly time `t` (relative match 1e-12).
    pub fn snapshot_at(&self, t: f64) -> Option<&FieldState> {
        self.snapshots.iter().find(|s| (s.t - t).abs() <= 1e-12 * t.abs().max(1e-300))
    }

    /// `u(r, t)`: linear in `r` through cell centers, linear in `t` between snapshots.
    pub fn value_at(&self, r: f64, t: f64) -> Result<f64> {
        let snaps = &self.snapshots;
        if snaps.is_empty() {
            return Err(domain("empty series"));
        }
        if r < 0.0 || r > self.grid.radius {
            return Err(domain(format!("radius {r} outside [0, {}]", self.grid.radius)));
        }
        if let Some(s) = self.snapshot_at(t) {
            return Ok(self.grid.interpolate(&s.values, r));
        }
        let first = snaps[0].t;
        let last = snaps[snaps.len() - 1].t;
        if t < first || t > last {
            return Err(domain(format!("time {t} outside snapshot range [{first}, {last}]")));
        }
        let j = snaps.partition_point(|s| s.t <= t);
        let (a, b) = (&snaps[j - 1], &snaps[j]);
        let w = (t - a.t) / (b.t - a.t);
        let ua = self.grid.interpolate(&a.values, r);
        let ub = self.grid.interpolate(&b.values, r);
        Ok(ua * (1.0 - w) + ub * w)
    }

    pub fn final_state(&self) -> Option<&FieldState> {
        self.snapshots.last()
    }
}

/// Mass fraction found in cells whose center lies beyond `0.95 R`.
pub fn boundary_mass_fraction(grid: &RadialGrid, state: &FieldState) -> f64 {
    let cut = 0.95 * grid.radius;
    let outer: f64 = grid
        .centers
        .iter()
        .zip(&grid.volumes)
        .zip(&state.values)
        .filter(|((c, _), _)| **c > cut)
        .map(|((_, v), u)| u * v)
        .sum();
    if state.mass > 0.0 {
        outer / state.mass
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_dt_matches_sequence() {
        let s = TimeSchedule::geometric(0.0, 1.0, 1.05, 200, vec![1.0]);
        s.validate().unwrap();
        let mut t = 0.0;
        let mut dt = s.dt0();
        for _ in 0..200 {
            assert!((s.nominal_dt(t) - dt).abs() < 1e-12 * dt);
            t += dt;
            dt *= 1.05;
        }
        assert!((t - 1.0).abs() < 1e-10);
    }

    #[test]
    fn schedule_validation() {
        assert!(TimeSchedule::fixed(0.0, 1.0, 0.1, vec![0.5, 0.4]).validate().is_err());
        assert!(TimeSchedule::fixed(0.0, 1.0, 0.1, vec![1.5]).validate().is_err());
        assert!(TimeSchedule::fixed(1.0, 1.0, 0.1, vec![]).validate().is_err());
        assert!(TimeSchedule::geometric(0.0, 1.0, 1.0, 10, vec![]).validate().is_err());
    }

    #[test]
    fn log_spacing_hits_ends() {
        let ts = TimeSchedule::log_spaced(1e-3, 1.0, 4);
        assert_eq!(ts.len(), 13);
        assert_eq!(ts[0], 1e-3);
        assert_eq!(*ts.last().unwrap(), 1.0);
    }

    #[test]
    fn state_rejects_negative_values() {
        let g = RadialGrid::uniform(1, 1.0, 4).unwrap();
        assert!(FieldState::new(0.0, vec![1.0, -1e-3, 0.0, 0.0], &g).is_err());
        let s = FieldState::new(0.0, vec![1.0; 4], &g).unwrap();
        assert!((s.mass - 2.0).abs() < 1e-15);
    }
}
