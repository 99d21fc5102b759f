use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::absorption::absorption_step;
use super::grid::RadialGrid;
use super::state::{boundary_mass_fraction, FieldState, RunStats, SnapshotSeries, StepMode, TimeSchedule, TracePoint};
use crate::error::{Error, Result};
use crate::model::{ModelSpec, Nonlinearity};
use crate::quadrature::{GL5_NODES, GL5_WEIGHTS};

/// Fewest cells that must lie inside the initial bump.
pub const MIN_SUPPORT_CELLS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionScheme {
    /// Implicit Euler: positivity preserving, first order.
    BackwardEuler,
    /// Richardson combination `2·BE(dt/2)² − BE(dt)`, second order, clamped at 0.
    Extrapolated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub scheme: DiffusionScheme,
    pub newton_tol: f64,
    pub max_newton: usize,
    pub max_halvings: usize,
    /// Bound on `|Δ ln h|` per step while absorption is active.
    pub max_dlog_h: f64,
    /// Absorption counts as active when `h·dt·g'(max u)` exceeds this.
    pub absorption_floor: f64,
    pub probes: Vec<f64>,
    pub max_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            scheme: DiffusionScheme::BackwardEuler,
            newton_tol: 1e-10,
            max_newton: 50,
            max_halvings: 12,
            max_dlog_h: 0.5,
            absorption_floor: 1e-12,
            probes: Vec::new(),
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    pub newton_iterations: usize,
    pub clamps: usize,
    pub halvings: usize,
}

impl StepStats {
    fn add(&mut self, o: StepStats) {
        self.newton_iterations += o.newton_iterations;
        self.clamps += o.clamps;
        self.halvings += o.halvings;
    }
}

/// `(1 − (r/ρ)²)₊²` averaged over each cell, scaled to mass `k` on the grid.
pub fn dirac_approx(grid: &RadialGrid, k: f64, rho: f64) -> Result<FieldState> {
    if !(k > 0.0) || !(rho > 0.0) {
        return Err(Error::Domain(format!("need k > 0 and rho > 0, got k={k}, rho={rho}")));
    }
    let inside = grid.cells_within(rho);
    if inside < MIN_SUPPORT_CELLS {
        return Err(Error::Resolution { rho, cells: inside, min_cells: MIN_SUPPORT_CELLS });
    }
    let bump = |r: f64| {
        let s = 1.0 - (r / rho).powi(2);
        if s > 0.0 { s * s } else { 0.0 }
    };
    let mut values = vec![0.0; grid.n_cells()];
    for (i, v) in values.iter_mut().enumerate() {
        let a = grid.edges[i];
        let b = grid.edges[i + 1].min(rho);
        if b <= a {
            continue;
        }
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        let integral: f64 = GL5_NODES
            .iter()
            .zip(GL5_WEIGHTS)
            .map(|(x, w)| {
                let r = c + h * x;
                w * h * bump(r) * grid.area_at(r)
            })
            .sum();
        *v = integral / grid.volumes[i];
    }
    let unit = grid.integrate(&values);
    for v in &mut values {
        *v *= k / unit;
    }
    FieldState::new(0.0, values, grid)
}

/// Default support radius `min(0.02, 1/k)`.
pub fn default_rho(k: f64) -> f64 {
    0.02f64.min(1.0 / k)
}

fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    rhs[0] /= beta;
    for i in 1..n {
        c[i - 1] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * c[i - 1];
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

/// Radial finite-volume integrator for one model on one grid.
#[derive(Debug, Clone)]
pub struct Solver {
    pub spec: ModelSpec,
    pub grid: RadialGrid,
    pub config: SolverConfig,
    // trans[i] couples cell i to i+1; the last entry couples to the Dirichlet ghost at R.
    trans: Vec<f64>,
}

impl Solver {
    pub fn new(spec: ModelSpec, grid: RadialGrid, config: SolverConfig) -> Result<Self> {
        spec.validate()?;
        if spec.dim_n != grid.dim_n {
            return Err(Error::Config(format!(
                "model dimension {} differs from grid dimension {}",
                spec.dim_n, grid.dim_n
            )));
        }
        let n = grid.n_cells();
        let trans = (0..n)
            .map(|i| {
                let face = grid.edges[i + 1];
                let next = if i + 1 < n { grid.centers[i + 1] } else { grid.radius };
                grid.area_at(face) / (next - grid.centers[i])
            })
            .collect();
        Ok(Solver { spec, grid, config, trans })
    }

    pub fn transmissibilities(&self) -> &[f64] {
        &self.trans
    }

    /// `Σ_faces` flux divergence of `v` per cell (not divided by volume).
    pub fn laplacian(&self, v: &[f64]) -> Vec<f64> {
        let n = v.len();
        (0..n)
            .map(|i| {
                let right = if i + 1 < n { v[i + 1] } else { 0.0 };
                let out = self.trans[i] * (right - v[i]);
                let inn = if i > 0 { self.trans[i - 1] * (v[i] - v[i - 1]) } else { 0.0 };
                out - inn
            })
            .collect()
    }

    fn backward_euler(&self, u_old: &[f64], dt: f64) -> Result<(Vec<f64>, StepStats)> {
        let n = u_old.len();
        let m = self.spec.m;
        let vol = &self.grid.volumes;
        let tr = &self.trans;
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        if m == 1.0 {
            let mut rhs: Vec<f64> = (0..n).map(|i| vol[i] * u_old[i]).collect();
            for i in 0..n {
                let left = if i > 0 { tr[i - 1] } else { 0.0 };
                diag[i] = vol[i] + dt * (left + tr[i]);
                lower[i] = -dt * left;
                upper[i] = -dt * tr[i];
            }
            thomas(&lower, &diag, &upper, &mut rhs);
            let mut clamps = 0;
            for x in &mut rhs {
                if *x < 0.0 {
                    *x = 0.0;
                    clamps += 1;
                }
            }
            return Ok((rhs, StepStats { newton_iterations: 1, clamps, halvings: 0 }));
        }
        // Unknown w: u itself for m > 1 (bounded Jacobian at u = 0), v = u^m for m < 1.
        let use_u = m > 1.0;
        let to_uv = |w: f64| -> (f64, f64, f64, f64) {
            let w = w.max(0.0);
            if use_u {
                (w, w.powf(m), 1.0, m * w.powf(m - 1.0))
            } else {
                let inv = 1.0 / m;
                (w.powf(inv), w, inv * w.powf(inv - 1.0), 1.0)
            }
        };
        let mut w: Vec<f64> = u_old.iter().map(|&u| if use_u { u } else { u.powf(m) }).collect();
        let tol = self.config.newton_tol;
        // Each cell's residual is measured against the size of its own storage and flux
        // terms, so cells far below the peak are converged too. Below a floor relative to
        // the peak cell content the residual is absolute: with m > 1 the cells just ahead
        // of the front have a degenerate root, and with m < 1 a single step fills a tail
        // spanning many decades that would otherwise converge one cell at a time.
        let floor = 1e-6 * vol.iter().zip(u_old).map(|(v, u)| v * u).fold(0.0, f64::max);
        let residual = |w: &[f64]| -> (Vec<f64>, f64) {
            let mut v = vec![0.0; n];
            let mut u = vec![0.0; n];
            for i in 0..n {
                let (ui, vi, _, _) = to_uv(w[i]);
                u[i] = ui;
                v[i] = vi;
            }
            let mut norm: f64 = 0.0;
            let r: Vec<f64> = (0..n)
                .map(|i| {
                    let right = if i + 1 < n { v[i + 1] } else { 0.0 };
                    let out = tr[i] * (right - v[i]);
                    let inn = if i > 0 { tr[i - 1] * (v[i] - v[i - 1]) } else { 0.0 };
                    let ri = vol[i] * (u[i] - u_old[i]) - dt * (out - inn);
                    let size = vol[i] * (u[i] + u_old[i]) + dt * (out.abs() + inn.abs());
                    if ri != 0.0 {
                        norm = norm.max(ri.abs() / size.max(floor).max(f64::MIN_POSITIVE));
                    }
                    ri
                })
                .collect();
            (r, norm)
        };
        let (mut r, mut norm) = residual(&w);
        let mut stats = StepStats::default();
        for _ in 0..self.config.max_newton {
            if norm <= tol {
                let u = w.iter().map(|&x| to_uv(x).0).collect();
                return Ok((u, stats));
            }
            stats.newton_iterations += 1;
            let d: Vec<(f64, f64)> = w.iter().map(|&x| {
                let (_, _, du, dv) = to_uv(x);
                (du, dv)
            }).collect();
            for i in 0..n {
                let left = if i > 0 { tr[i - 1] } else { 0.0 };
                diag[i] = vol[i] * d[i].0 + dt * (left + tr[i]) * d[i].1;
                lower[i] = if i > 0 { -dt * left * d[i - 1].1 } else { 0.0 };
                upper[i] = if i + 1 < n { -dt * tr[i] * d[i + 1].1 } else { 0.0 };
            }
            let mut delta: Vec<f64> = r.iter().map(|x| -x).collect();
            thomas(&lower, &diag, &upper, &mut delta);
            let mut lambda = 1.0;
            let mut accepted = None;
            for _ in 0..12 {
                let mut clamps = 0;
                let trial: Vec<f64> = w
                    .iter()
                    .zip(&delta)
                    .map(|(x, d)| {
                        let y = x + lambda * d;
                        if y < 0.0 {
                            clamps += 1;
                            0.0
                        } else {
                            y
                        }
                    })
                    .collect();
                let (rt, nt) = residual(&trial);
                if nt.is_finite() && nt < norm * (1.0 - 1e-4 * lambda) {
                    accepted = Some((trial, rt, nt, clamps));
                    break;
                }
                if accepted.is_none() && nt.is_finite() {
                    accepted = Some((trial, rt, nt, clamps));
                }
                lambda *= 0.5;
            }
            let (trial, rt, nt, clamps) = accepted.ok_or_else(|| Error::Numerical {
                message: "Newton produced non-finite residuals".into(),
                partial: norm,
            })?;
            stats.clamps += clamps;
            w = trial;
            r = rt;
            norm = nt;
        }
        if norm <= tol {
            let u = w.iter().map(|&x| to_uv(x).0).collect();
            return Ok((u, stats));
        }
        Err(Error::Numerical {
            message: format!("Newton did not converge in {} iterations", self.config.max_newton),
            partial: norm,
        })
    }

    fn diffusion_once(&self, u: &[f64], dt: f64) -> Result<(Vec<f64>, StepStats)> {
        match self.config.scheme {
            DiffusionScheme::BackwardEuler => self.backward_euler(u, dt),
            DiffusionScheme::Extrapolated => {
                let (full, mut s) = self.backward_euler(u, dt)?;
                let (half, s1) = self.backward_euler(u, 0.5 * dt)?;
                let (half, s2) = self.backward_euler(&half, 0.5 * dt)?;
                s.add(s1);
                s.add(s2);
                let out = half
                    .iter()
                    .zip(&full)
                    .map(|(h, f)| {
                        let x = 2.0 * h - f;
                        if x < 0.0 {
                            s.clamps += 1;
                            0.0
                        } else {
                            x
                        }
                    })
                    .collect();
                Ok((out, s))
            }
        }
    }

    /// Implicit diffusion over `dt`; retried on `2^j` substeps when Newton fails.
    pub fn diffusion_step(&self, state: &FieldState, dt: f64) -> Result<(FieldState, StepStats)> {
        if !(dt > 0.0) {
            return Err(Error::Domain(format!("dt must be positive, got {dt}")));
        }
        let mut last_err = None;
        for j in 0..=self.config.max_halvings {
            let pieces = 1usize << j;
            let h = dt / pieces as f64;
            let mut u = state.values.clone();
            let mut stats = StepStats { halvings: j, ..Default::default() };
            let mut ok = true;
            for _ in 0..pieces {
                match self.diffusion_once(&u, h) {
                    Ok((next, s)) => {
                        u = next;
                        stats.add(s);
                    }
                    Err(e) => {
                        last_err = Some(e);
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                let out = FieldState::new(state.t + dt, u, &self.grid)?;
                return Ok((out, stats));
            }
            debug!("diffusion step dt={dt:e} failed with {pieces} pieces, halving");
        }
        Err(Error::Numerical {
            message: format!(
                "diffusion step at t={:e} failed after {} halvings: {}",
                state.t,
                self.config.max_halvings,
                last_err.map(|e| e.to_string()).unwrap_or_default()
            ),
            partial: state.mass,
        })
    }

    pub fn absorption_step(&self, state: &FieldState, t_mid: f64, dt: f64) -> Result<FieldState> {
        absorption_step(state, t_mid, dt, &self.spec, &self.grid)
    }

    /// Strang step: half absorption, full diffusion, half absorption.
    pub fn step(&self, state: &FieldState, dt: f64) -> Result<(FieldState, StepStats)> {
        let t = state.t;
        let a = self.absorption_step(state, t + 0.25 * dt, 0.5 * dt)?;
        let (d, stats) = self.diffusion_step(&a, dt)?;
        let mut out = self.absorption_step(&d, t + 0.75 * dt, 0.5 * dt)?;
        out.t = t + dt;
        Ok((out, stats))
    }

    fn absorption_active(&self, t: f64, dt: f64, max_u: f64) -> Result<bool> {
        let lh = self.spec.absorption.log_h(t + dt)?;
        let lg = match self.spec.nonlinearity {
            Nonlinearity::PowerQ => (self.spec.q - 1.0) * max_u.max(1e-300).ln(),
            Nonlinearity::ExpMinusOne => max_u,
        };
        Ok(lh + dt.ln() + lg > self.config.absorption_floor.ln())
    }

    // Shrink dt until ln h changes by at most max_dlog_h over the step.
    fn control_dt(&self, t: f64, mut dt: f64, max_u: f64) -> Result<f64> {
        let law = &self.spec.absorption;
        for _ in 0..200 {
            if !self.absorption_active(t, dt, max_u)? {
                return Ok(dt);
            }
            let from = if t > 0.0 { t } else { 0.5 * dt };
            let change = (law.log_h(t + dt)? - law.log_h(from)?).abs();
            if !(change > self.config.max_dlog_h) {
                return Ok(dt);
            }
            dt *= 0.5;
        }
        Ok(dt)
    }

    fn trace(&self, s: &FieldState) -> TracePoint {
        TracePoint {
            t: s.t,
            mass: s.mass,
            max_u: s.max_value(),
            u_at_probes: self
                .config
                .probes
                .iter()
                .map(|&r| if r <= self.grid.radius { self.grid.interpolate(&s.values, r) } else { 0.0 })
                .collect(),
        }
    }

    /// Stable first step for Dirac data: `ρ² / (2N · max diffusivity)`.
    pub fn initial_dt_cap(&self, state: &FieldState, rho: f64) -> f64 {
        let m = self.spec.m;
        let umax = state.max_value();
        let level = if m < 1.0 { 0.5 * umax } else { umax };
        let diffusivity = if m == 1.0 { 1.0 } else { m * level.powf(m - 1.0) };
        rho * rho / (2.0 * self.spec.dim_n as f64 * diffusivity.max(1e-300))
    }

    /// Integrates from `initial` along `schedule`; the first step is at most `dt_cap`.
    pub fn run_from(&self, initial: FieldState, k: f64, rho: f64, schedule: &TimeSchedule, dt_cap: Option<f64>) -> Result<SnapshotSeries> {
        schedule.validate()?;
        let mut series = SnapshotSeries {
            spec: self.spec,
            grid: self.grid.clone(),
            k,
            rho,
            snapshots: vec![initial.clone()],
            probes: self.config.probes.clone(),
            traces: vec![self.trace(&initial)],
            stats: RunStats::default(),
            boundary_mass_fraction: boundary_mass_fraction(&self.grid, &initial),
            failure: None,
        };
        let mut targets: Vec<(f64, bool)> = schedule.snapshot_times.iter().map(|&t| (t, true)).collect();
        if targets.last().map(|x| x.0) != Some(schedule.t_end) {
            targets.push((schedule.t_end, false));
        }
        let geometric = matches!(schedule.mode, StepMode::Geometric { .. });
        let ratio = match schedule.mode {
            StepMode::Geometric { ratio, .. } => ratio,
            StepMode::Fixed { .. } => 1.0,
        };
        let mut dt_base = schedule.dt0().min(dt_cap.unwrap_or(f64::INFINITY));
        let mut state = initial;
        state.t = schedule.t_start;
        'outer: for (target, record) in targets {
            while state.t < target {
                if series.stats.steps >= self.config.max_steps {
                    series.failure = Some(format!("step limit {} reached at t={:e}", self.config.max_steps, state.t));
                    break 'outer;
                }
                let mut dt = dt_base;
                if geometric {
                    dt = match self.control_dt(state.t, dt, state.max_value()) {
                        Ok(dt) => dt,
                        Err(e) => {
                            series.failure = Some(e.to_string());
                            break 'outer;
                        }
                    };
                }
                let remain = target - state.t;
                let lands = dt >= remain - 0.25 * dt;
                if lands {
                    dt = remain;
                }
                match self.step(&state, dt) {
                    Ok((mut next, st)) => {
                        if lands {
                            next.t = target;
                        }
                        series.stats.steps += 1;
                        series.stats.newton_iterations += st.newton_iterations;
                        series.stats.clamps += st.clamps;
                        series.stats.halvings += st.halvings;
                        series.traces.push(self.trace(&next));
                        state = next;
                    }
                    Err(e) => {
                        warn!("run k={k} failed: {e}");
                        series.failure = Some(e.to_string());
                        break 'outer;
                    }
                }
                if geometric {
                    dt_base = (dt_base * ratio).min(schedule.nominal_dt(state.t));
                }
            }
            if record {
                let frac = boundary_mass_fraction(&self.grid, &state);
                series.boundary_mass_fraction = series.boundary_mass_fraction.max(frac);
                series.snapshots.push(state.clone());
            }
        }
        if !series.truncation_ok() {
            warn!(
                "run k={k}: outer 5% of the ball carries {:e} of the mass",
                series.boundary_mass_fraction
            );
        }
        Ok(series)
    }

    /// Run from Dirac-sequence data of mass `k` and support `rho`.
    pub fn run(&self, k: f64, rho: f64, schedule: &TimeSchedule) -> Result<SnapshotSeries> {
        let init = dirac_approx(&self.grid, k, rho)?;
        let cap = self.initial_dt_cap(&init, rho);
        self.run_from(init, k, rho, schedule, Some(cap))
    }
}

/// Convenience wrapper building a [`Solver`] with the given configuration.
pub fn run(spec: &ModelSpec, grid: &RadialGrid, k: f64, rho: f64, schedule: &TimeSchedule, config: &SolverConfig) -> Result<SnapshotSeries> {
    Solver::new(*spec, grid.clone(), config.clone())?.run(k, rho, schedule)
}
