//! Self-similar very singular profiles by shooting, and their asymptotic constants.

mod fit;
mod pme;
pub mod rk;
mod semilinear;

use serde::{Deserialize, Serialize};

pub use fit::{fit_asymptotics, AsymptoticFit};
pub use pme::{pme_residual, shoot_pme_vss};
pub use semilinear::{semilinear_residual, shoot_semilinear_vss};

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    SemilinearVss,
    PmeVss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    FastDecay,
    SlowDecay,
    Crossing,
    CompactSupport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileProblem {
    pub kind: ProfileKind,
    pub dim_n: usize,
    pub q: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default = "default_m")]
    pub m: f64,
    pub r_max: f64,
    pub tol: f64,
}

fn default_m() -> f64 {
    1.0
}

impl ProfileProblem {
    pub fn semilinear(dim_n: usize, q: f64, alpha: f64, r_max: f64, tol: f64) -> Self {
        ProfileProblem { kind: ProfileKind::SemilinearVss, dim_n, q, alpha, m: 1.0, r_max, tol }
    }

    pub fn pme(dim_n: usize, m: f64, q: f64, r_max: f64, tol: f64) -> Self {
        ProfileProblem { kind: ProfileKind::PmeVss, dim_n, q, alpha: 0.0, m, r_max, tol }
    }

    /// `2(1+α)/(q−1)`: the algebraic rate of the non-decaying alternative.
    pub fn slow_rate(&self) -> f64 {
        2.0 * (1.0 + self.alpha) / (self.q - 1.0)
    }

    /// Exponent of `r` in the fast-decay asymptotics `C r^{p−N} e^{−r²/4}`.
    pub fn decay_exponent(&self) -> f64 {
        self.slow_rate() - self.dim_n as f64
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim_n as f64;
        if self.dim_n == 0 || !(self.r_max > 0.0) || !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(domain(format!(
                "need N >= 1, r_max > 0 and 0 < tol < 1, got N={}, r_max={}, tol={}",
                self.dim_n, self.r_max, self.tol
            )));
        }
        match self.kind {
            ProfileKind::SemilinearVss => {
                let qc = 1.0 + 2.0 * (1.0 + self.alpha) / n;
                if !(self.alpha >= 0.0) || !(self.q > 1.0 && self.q < qc) {
                    return Err(domain(format!(
                        "semilinear profile needs alpha >= 0 and 1 < q < {qc}, got alpha={}, q={}",
                        self.alpha, self.q
                    )));
                }
            }
            ProfileKind::PmeVss => {
                let (m, q) = (self.m, self.q);
                if !(m > 1.0 && q > m && q < m + 2.0 / n) {
                    return Err(domain(format!(
                        "PME profile needs 1 < m < q < m + 2/N, got m={m}, q={q}, N={}",
                        self.dim_n
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Integration and classification knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShootingConfig {
    /// Spacing of the reported grid; integrator steps never exceed it.
    pub grid_spacing: f64,
    pub rtol_near: f64,
    pub rtol_far: f64,
    /// Semilinear: switch to `(ln f, f'/f)` once `f < log_switch·f(0)`.
    pub log_switch: f64,
    /// Start radius as a fraction of `max(1, r_max)`.
    pub start_fraction: f64,
    /// Bracket `[c₀/factor, c₀·factor]` for the shooting parameter.
    pub bracket_factor: f64,
    pub max_bisections: usize,
    /// Keep bisecting past `tol` (towards machine precision) before building the reported grid.
    pub polish: bool,
    /// PME interface: `G < interface_value·G(0)` and `|G'| < interface_slope·G(0)`.
    pub interface_value: f64,
    pub interface_slope: f64,
    /// PME: below `tail_level·G(0)` a decreasing `−ηF'/F` marks the algebraic tail.
    pub tail_level: f64,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        ShootingConfig {
            grid_spacing: 0.01,
            rtol_near: 1e-10,
            rtol_far: 1e-8,
            log_switch: 1e-8,
            start_fraction: 1e-6,
            bracket_factor: 1e3,
            max_bisections: 200,
            polish: true,
            interface_value: 1e-14,
            interface_slope: 1e-10,
            tail_level: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSolution {
    pub shoot_value: f64,
    pub xi: Vec<f64>,
    pub f: Vec<f64>,
    pub classification: Classification,
    pub support_radius: Option<f64>,
    pub fitted_exponent: Option<f64>,
    pub fitted_constant: Option<f64>,
    /// `min f(r)/((1+r)^{p−N}e^{−r²/4})` over the fit window.
    pub lower_bound_constant: Option<f64>,
    /// Final shooting bracket `[lo, hi]`.
    pub bracket: (f64, f64),
    pub bisections: usize,
}

/// Bisection on a parameter whose classification flips once inside `[lo, hi]`.
/// `below(a)` is true on the side containing `lo`.
pub(crate) fn bisect<F: FnMut(f64) -> Result<bool>>(mut lo: f64, mut hi: f64, rel_tol: f64, max_iter: usize, mut below: F) -> Result<(f64, f64, usize)> {
    let mut n = 0;
    while n < max_iter {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo.min(hi) && mid < lo.max(hi)) || (hi - lo).abs() <= rel_tol * mid.abs() {
            break;
        }
        if below(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
        n += 1;
    }
    Ok((lo, hi, n))
}
