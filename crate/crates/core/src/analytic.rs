//! Closed-form reference solutions and bounds.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{AbsorptionLaw, ModelSpec, Nonlinearity};
use crate::quadrature::integrate;
use crate::solver::{unit_sphere_area, FieldState, SnapshotSeries, TracePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    UniversalBound,
    ExpBound,
    HeatKernel,
    BarenblattSlow,
    BarenblattFast,
    RazorBlade,
    PmeLimit,
}

/// `U_h(t) = ((q−1) H(t))^{−1/(q−1)}`, `+∞` when `H(t) = 0`.
pub fn universal_bound(spec: &ModelSpec, t: f64) -> Result<f64> {
    if spec.nonlinearity != Nonlinearity::PowerQ {
        return Err(Error::WrongRegime("universal bound needs g(u) = u^q".into()));
    }
    if !(t > 0.0) {
        return Err(domain(format!("t must be positive, got {t}")));
    }
    let q = spec.q;
    let log_h_int = spec.absorption.h_primitive(t)?.log_value;
    if log_h_int == f64::NEG_INFINITY {
        return Ok(f64::INFINITY);
    }
    Ok((-((q - 1.0).ln() + log_h_int) / (q - 1.0)).exp())
}

/// `V_S(t) = −ln H(t)`.
pub fn exp_bound(law: &AbsorptionLaw, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(domain(format!("t must be positive, got {t}")));
    }
    Ok(-law.h_primitive(t)?.log_value)
}

/// `(4πt)^{−N/2} e^{−r²/4t}`.
pub fn heat_kernel(dim_n: usize, r: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(domain(format!("t must be positive, got {t}")));
    }
    let n = dim_n as f64;
    Ok((-0.5 * n * (4.0 * std::f64::consts::PI * t).ln() - r * r / (4.0 * t)).exp())
}

/// `ℓ/N`-dependent coefficient of `r²/t^{2ℓ/N}` inside the Barenblatt bracket.
fn barenblatt_coefficient(m: f64, dim_n: usize) -> f64 {
    let n = dim_n as f64;
    let ell = n / (n * (m - 1.0) + 2.0);
    (m - 1.0).abs() * ell / (2.0 * m * n)
}

/// Mass of the Barenblatt profile with constant `c` (at `t = 1`), by radial quadrature.
fn barenblatt_mass(m: f64, dim_n: usize, c: f64) -> Result<f64> {
    let n = dim_n as f64;
    let b = barenblatt_coefficient(m, dim_n);
    let sphere = unit_sphere_area(dim_n);
    let a = (c / b).sqrt();
    if m > 1.0 {
        let p = 1.0 / (m - 1.0);
        let f = |r: f64| {
            let s = c - b * r * r;
            if s > 0.0 { s.powf(p) * r.powf(n - 1.0) } else { 0.0 }
        };
        Ok(sphere * integrate(f, 0.0, a, 1e-13, 0.0)?.value)
    } else {
        // r = a tan θ maps [0, ∞) onto [0, π/2).
        let p = 1.0 / (1.0 - m);
        let f = |th: f64| {
            let (s, co) = th.sin_cos();
            if co <= 0.0 {
                return 0.0;
            }
            s.powf(n - 1.0) * co.powf(2.0 * p - n - 1.0)
        };
        let est = integrate(f, 0.0, std::f64::consts::FRAC_PI_2, 1e-13, 0.0)?;
        Ok(sphere * a.powf(n) * c.powf(-p) * est.value)
    }
}

type CacheKey = (u64, usize, u64);

fn cache() -> &'static RwLock<HashMap<CacheKey, f64>> {
    static CACHE: OnceLock<RwLock<HashMap<CacheKey, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// `C_k` such that the Barenblatt solution carries mass `k`, by bisection on `ln C`.
pub fn barenblatt_constant(m: f64, dim_n: usize, k: f64) -> Result<f64> {
    if m == 1.0 {
        return Err(Error::WrongRegime("Barenblatt constants need m != 1".into()));
    }
    if !(k > 0.0) {
        return Err(domain(format!("mass must be positive, got {k}")));
    }
    let n = dim_n as f64;
    if m < 1.0 && !(m > (n - 2.0).max(0.0) / n) {
        return Err(Error::WrongRegime(format!("fast Barenblatt needs m > (N-2)_+/N, got {m}")));
    }
    let key = (m.to_bits(), dim_n, k.to_bits());
    if let Some(c) = cache().read().expect("cache lock").get(&key) {
        return Ok(*c);
    }
    // Mass increases with C for m > 1 and decreases for m < 1.
    let increasing = m > 1.0;
    let excess = |ln_c: f64| -> Result<f64> {
        let mass = barenblatt_mass(m, dim_n, ln_c.exp())?;
        Ok(if increasing { mass - k } else { k - mass })
    };
    let (mut lo, mut hi) = (-1.0, 1.0);
    let mut tries = 0;
    while excess(lo)? > 0.0 {
        lo -= 2.0 * (hi - lo);
        tries += 1;
        if tries > 60 {
            return Err(Error::Bracket { lo: "mass above target".into(), hi: "mass above target".into() });
        }
    }
    while excess(hi)? < 0.0 {
        hi += 2.0 * (hi - lo);
        tries += 1;
        if tries > 60 {
            return Err(Error::Bracket { lo: "mass below target".into(), hi: "mass below target".into() });
        }
    }
    // Bisection on ln C until the bracket is below 1e-12 relative in C.
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if excess(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = (0.5 * (lo + hi)).exp();
    cache().write().expect("cache lock").insert(key, c);
    Ok(c)
}

/// Barenblatt solution of the porous medium equation (`m > 1`) with mass `k`.
pub fn barenblatt_slow(spec: &ModelSpec, k: f64, r: f64, t: f64) -> Result<f64> {
    if !(spec.m > 1.0) {
        return Err(Error::WrongRegime(format!("slow Barenblatt needs m > 1, got {}", spec.m)));
    }
    if !(t > 0.0) {
        return Err(domain(format!("t must be positive, got {t}")));
    }
    let m = spec.m;
    let ell = spec.ell();
    let n = spec.dim_n as f64;
    let c = barenblatt_constant(m, spec.dim_n, k)?;
    let b = barenblatt_coefficient(m, spec.dim_n);
    let s = c - b * r * r / t.powf(2.0 * ell / n);
    Ok(if s > 0.0 { t.powf(-ell) * s.powf(1.0 / (m - 1.0)) } else { 0.0 })
}

/// Support radius `(2mN C_k/((m−1)ℓ))^{1/2} t^{ℓ/N}` of the slow Barenblatt solution.
pub fn barenblatt_support(spec: &ModelSpec, k: f64, t: f64) -> Result<f64> {
    if !(spec.m > 1.0) {
        return Err(Error::WrongRegime(format!("slow Barenblatt needs m > 1, got {}", spec.m)));
    }
    let c = barenblatt_constant(spec.m, spec.dim_n, k)?;
    let n = spec.dim_n as f64;
    let ell = spec.ell();
    Ok((2.0 * spec.m * n * c / ((spec.m - 1.0) * ell)).sqrt() * t.powf(ell / n))
}

fn check_fast(spec: &ModelSpec) -> Result<()> {
    let n = spec.dim_n as f64;
    if !(spec.m < 1.0 && spec.m > (n - 2.0).max(0.0) / n) {
        return Err(Error::WrongRegime(format!(
            "fast diffusion needs (N-2)_+/N < m < 1, got m = {}",
            spec.m
        )));
    }
    Ok(())
}

/// Barenblatt solution of the fast diffusion equation with mass `k`.
pub fn barenblatt_fast(spec: &ModelSpec, k: f64, r: f64, t: f64) -> Result<f64> {
    check_fast(spec)?;
    if !(t > 0.0) {
        return Err(domain(format!("t must be positive, got {t}")));
    }
    let m = spec.m;
    let ell = spec.ell();
    let n = spec.dim_n as f64;
    let c = barenblatt_constant(m, spec.dim_n, k)?;
    let b = barenblatt_coefficient(m, spec.dim_n);
    let s = c + b * r * r / t.powf(2.0 * ell / n);
    Ok(t.powf(-ell) * s.powf(-1.0 / (1.0 - m)))
}

/// `C_* = (2m(mN+2−N)/(1−m))^{1/(1−m)}`, the constant of the `k → ∞` Barenblatt limit.
pub fn razor_constant(spec: &ModelSpec) -> Result<f64> {
    check_fast(spec)?;
    Ok(barenblatt_coefficient(spec.m, spec.dim_n).powf(-1.0 / (1.0 - spec.m)))
}

/// `W = C_* (t/r²)^{1/(1−m)}`.
pub fn razor_blade(spec: &ModelSpec, r: f64, t: f64) -> Result<f64> {
    let c = razor_constant(spec)?;
    if r == 0.0 {
        return Err(Error::SingularPoint("razor blade is infinite at x = 0".into()));
    }
    if !(r > 0.0) || !(t >= 0.0) {
        return Err(domain(format!("need r > 0 and t >= 0, got r={r}, t={t}")));
    }
    Ok(c * (t / (r * r)).powf(1.0 / (1.0 - spec.m)))
}

fn power_gamma(spec: &ModelSpec) -> Option<f64> {
    match spec.absorption {
        AbsorptionLaw::Constant { .. } => Some(0.0),
        AbsorptionLaw::Power { alpha } => Some(alpha),
        _ => None,
    }
}

/// `(m−1)^{−1/(q−1)} t^{−1/(m−1)}` for `h = t^γ`, `γ = (q−m)/(m−1)`, `q > m > 1`.
pub fn pme_limit(spec: &ModelSpec, t: f64) -> Result<f64> {
    let (m, q) = (spec.m, spec.q);
    if spec.nonlinearity != Nonlinearity::PowerQ || !(q > m && m > 1.0) {
        return Err(Error::WrongRegime(format!("needs q > m > 1, got m={m}, q={q}")));
    }
    let target = (q - m) / (m - 1.0);
    match spec.absorption {
        AbsorptionLaw::Power { alpha } if (alpha - target).abs() <= 1e-12 * target.max(1.0) => {}
        _ => {
            return Err(Error::WrongScenario(format!(
                "needs absorption Power(gamma = {target}), got {:?}",
                spec.absorption
            )))
        }
    }
    if !(t > 0.0) {
        return Err(domain(format!("t must be positive, got {t}")));
    }
    Ok((m - 1.0).powf(-1.0 / (q - 1.0)) * t.powf(-1.0 / (m - 1.0)))
}

/// `(α, β)` of the scaling `T_ℓ(u)(x,t) = ℓ^α u(ℓ^β x, ℓ t)`.
pub fn scaling_exponents(spec: &ModelSpec) -> Result<(f64, f64)> {
    if spec.nonlinearity != Nonlinearity::PowerQ {
        return Err(Error::WrongScenario("scaling needs g(u) = u^q".into()));
    }
    let gamma = power_gamma(spec)
        .ok_or_else(|| Error::WrongScenario(format!("scaling needs h = t^gamma, got {:?}", spec.absorption)))?;
    let (m, q) = (spec.m, spec.q);
    let alpha = (1.0 + gamma) / (q - 1.0);
    let beta = (q - m - gamma * (m - 1.0)) / (2.0 * (q - 1.0));
    Ok((alpha, beta))
}

/// Applies `T_ℓ`; snapshot times become `t/ℓ`. Total mass scales by `ℓ^{α−Nβ}`.
pub fn scaling_transform(series: &SnapshotSeries, ell_scale: f64, spec: &ModelSpec) -> Result<SnapshotSeries> {
    if !(ell_scale > 0.0) {
        return Err(domain(format!("scale must be positive, got {ell_scale}")));
    }
    let (alpha, beta) = scaling_exponents(spec)?;
    let grid = &series.grid;
    let amp = ell_scale.powf(alpha);
    let stretch = ell_scale.powf(beta);
    let resample = beta.abs() > 1e-14 && ell_scale != 1.0;
    let map_values = |v: &[f64]| -> Vec<f64> {
        if resample {
            grid.centers
                .iter()
                .map(|&r| {
                    let x = r * stretch;
                    if x >= grid.radius { 0.0 } else { amp * grid.interpolate(v, x) }
                })
                .collect()
        } else {
            v.iter().map(|u| amp * u).collect()
        }
    };
    let snapshots: Vec<FieldState> = series
        .snapshots
        .iter()
        .filter(|s| s.t > 0.0 || ell_scale == 1.0)
        .map(|s| FieldState::new(s.t / ell_scale, map_values(&s.values), grid))
        .collect::<Result<_>>()?;
    if snapshots.is_empty() {
        return Err(domain("no snapshots at positive times to transform"));
    }
    let mass_factor = ell_scale.powf(alpha - spec.dim_n as f64 * beta);
    let traces = series
        .traces
        .iter()
        .map(|p| TracePoint {
            t: p.t / ell_scale,
            mass: p.mass * mass_factor,
            max_u: p.max_u * amp,
            u_at_probes: if resample { Vec::new() } else { p.u_at_probes.iter().map(|u| u * amp).collect() },
        })
        .collect();
    Ok(SnapshotSeries {
        spec: *spec,
        grid: grid.clone(),
        k: series.k * mass_factor,
        rho: series.rho,
        snapshots,
        probes: if resample { Vec::new() } else { series.probes.clone() },
        traces,
        stats: series.stats.clone(),
        boundary_mass_fraction: series.boundary_mass_fraction,
        failure: series.failure.clone(),
    })
}

/// A reference solution with its constants resolved once.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceSolution {
    pub kind: ReferenceKind,
    pub spec: ModelSpec,
    pub k: Option<f64>,
    pub ell: f64,
    pub c_k: Option<f64>,
    pub c_star: Option<f64>,
}

impl ReferenceSolution {
    pub fn new(kind: ReferenceKind, spec: &ModelSpec, k: Option<f64>) -> Result<Self> {
        let needs_k = matches!(kind, ReferenceKind::HeatKernel | ReferenceKind::BarenblattSlow | ReferenceKind::BarenblattFast);
        let k = if needs_k { Some(k.unwrap_or(1.0)) } else { None };
        let mut c_k = None;
        let mut c_star = None;
        match kind {
            ReferenceKind::BarenblattSlow => {
                if !(spec.m > 1.0) {
                    return Err(Error::WrongRegime("slow Barenblatt needs m > 1".into()));
                }
                c_k = Some(barenblatt_constant(spec.m, spec.dim_n, k.unwrap())?);
            }
            ReferenceKind::BarenblattFast => {
                check_fast(spec)?;
                c_k = Some(barenblatt_constant(spec.m, spec.dim_n, k.unwrap())?);
            }
            ReferenceKind::RazorBlade => c_star = Some(razor_constant(spec)?),
            ReferenceKind::UniversalBound if spec.nonlinearity != Nonlinearity::PowerQ => {
                return Err(Error::WrongRegime("universal bound needs g(u) = u^q".into()));
            }
            ReferenceKind::PmeLimit => {
                pme_limit(spec, 1.0)?;
            }
            _ => {}
        }
        Ok(ReferenceSolution { kind, spec: *spec, k, ell: spec.ell(), c_k, c_star })
    }

    pub fn value(&self, r: f64, t: f64) -> Result<f64> {
        let s = &self.spec;
        match self.kind {
            ReferenceKind::UniversalBound => universal_bound(s, t),
            ReferenceKind::ExpBound => exp_bound(&s.absorption, t),
            ReferenceKind::HeatKernel => Ok(self.k.unwrap_or(1.0) * heat_kernel(s.dim_n, r, t)?),
            ReferenceKind::BarenblattSlow => barenblatt_slow(s, self.k.unwrap_or(1.0), r, t),
            ReferenceKind::BarenblattFast => barenblatt_fast(s, self.k.unwrap_or(1.0), r, t),
            ReferenceKind::RazorBlade => razor_blade(s, r, t),
            ReferenceKind::PmeLimit => pme_limit(s, t),
        }
    }
}
