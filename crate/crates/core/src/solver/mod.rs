//! Radial finite-volume solver for `∂_t u − Δ(u^m) + h(t) g(u) = 0` on a ball.

mod absorption;
mod grid;
mod integrator;
pub mod io;
mod state;

pub use absorption::{absorb_value, absorption_step, log_h_integral};
pub use grid::{unit_sphere_area, GridParams, RadialGrid};
pub use integrator::{default_rho, dirac_approx, run, DiffusionScheme, Solver, SolverConfig, StepStats, MIN_SUPPORT_CELLS};
pub use state::{boundary_mass_fraction, FieldState, RunStats, SnapshotSeries, StepMode, TimeSchedule, TracePoint, BOUNDARY_MASS_LIMIT};
