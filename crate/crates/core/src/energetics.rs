//! Local energy functionals computed from stored snapshots.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::{AbsorptionLaw, Nonlinearity};
use crate::solver::{RadialGrid, SnapshotSeries};

/// Terms kept from the series `Σ_l (l!)^{−1} h |u|^{l+1}` for `g(u) = e^u − 1`.
pub const EXP_SERIES_TERMS: usize = 3;

fn h_value(law: &AbsorptionLaw, t: f64) -> Result<f64> {
    if t > 0.0 {
        return Ok(law.log_h(t)?.exp());
    }
    Ok(match *law {
        AbsorptionLaw::Constant { c } => c,
        AbsorptionLaw::Power { alpha: 0.0 } => 1.0,
        _ => 0.0,
    })
}

/// Fraction of the shell `[a, b]` lying beyond radius `tau`.
fn outside_fraction(dim_n: usize, a: f64, b: f64, tau: f64) -> f64 {
    if tau <= a {
        1.0
    } else if tau >= b {
        0.0
    } else {
        let n = dim_n as i32;
        (b.powi(n) - tau.powi(n)) / (b.powi(n) - a.powi(n))
    }
}

/// Spatial integrals of one field restricted to `|x| > tau`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SpaceIntegrals {
    pub grad_sq: f64,
    pub sq: f64,
    /// `∫ h^{-1}·(absorption energy density)`; multiply by `h(t)`.
    pub power: f64,
    pub exp_terms: [f64; EXP_SERIES_TERMS],
}

/// `∫_{|x|>τ} |Du|²`, `∫ u²`, `∫ u^{q+1}` (or the series terms) for one set of cell values.
pub fn space_integrals(grid: &RadialGrid, values: &[f64], q: f64, tau: f64) -> SpaceIntegrals {
    let n = grid.n_cells();
    let mut out = SpaceIntegrals::default();
    for i in 0..n {
        let w = outside_fraction(grid.dim_n, grid.edges[i], grid.edges[i + 1], tau) * grid.volumes[i];
        if w == 0.0 {
            continue;
        }
        let u = values[i];
        out.sq += w * u * u;
        out.power += w * u.powf(q + 1.0);
        let mut term = u;
        let mut fact = 1.0;
        for l in 0..EXP_SERIES_TERMS {
            term *= u;
            fact *= (l + 1) as f64;
            out.exp_terms[l] += w * term / fact;
        }
    }
    // Face gradients, each weighted by the part of its dual shell beyond τ.
    for i in 0..n {
        let (c_in, c_out, right) = if i + 1 < n {
            (grid.centers[i], grid.centers[i + 1], values[i + 1])
        } else {
            (grid.centers[i], grid.radius, 0.0)
        };
        let frac = outside_fraction(grid.dim_n, c_in, c_out, tau);
        if frac == 0.0 {
            continue;
        }
        let trans = grid.area_at(grid.edges[i + 1]) / (c_out - c_in);
        out.grad_sq += frac * trans * (right - values[i]).powi(2);
    }
    out
}

/// Which space-time functional to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Functional {
    GradSq,
    Absorption,
    Square,
    /// One term `l ∈ {1, 2, 3}` of the exponential series.
    ExpTerm(usize),
}

fn density(series: &SnapshotSeries, values: &[f64], t: f64, tau: f64, which: Functional) -> Result<f64> {
    let s = space_integrals(&series.grid, values, series.spec.q, tau);
    Ok(match which {
        Functional::GradSq => s.grad_sq,
        Functional::Square => s.sq,
        Functional::Absorption => {
            let h = h_value(&series.spec.absorption, t)?;
            match series.spec.nonlinearity {
                Nonlinearity::PowerQ => h * s.power,
                Nonlinearity::ExpMinusOne => h * s.exp_terms.iter().sum::<f64>(),
            }
        }
        Functional::ExpTerm(l) => {
            if !(1..=EXP_SERIES_TERMS).contains(&l) {
                return Err(domain(format!("series term {l} outside 1..={EXP_SERIES_TERMS}")));
            }
            h_value(&series.spec.absorption, t)? * s.exp_terms[l - 1]
        }
    })
}

/// Cell values at time `t`, linear between snapshots.
fn values_at(series: &SnapshotSeries, t: f64) -> Result<Vec<f64>> {
    let snaps = &series.snapshots;
    let j = snaps.partition_point(|s| s.t < t);
    if j < snaps.len() && snaps[j].t == t {
        return Ok(snaps[j].values.clone());
    }
    if j == 0 || j == snaps.len() {
        return Err(domain(format!("time {t} outside the snapshot range")));
    }
    let (a, b) = (&snaps[j - 1], &snaps[j]);
    let w = (t - a.t) / (b.t - a.t);
    Ok(a.values.iter().zip(&b.values).map(|(x, y)| x * (1.0 - w) + y * w).collect())
}

/// `∫_{t_a}^{t_b} ∫_{|x|>τ} (functional) dx dt`, trapezoid in `t` over the snapshots. The
/// density at an end point between snapshots is interpolated linearly, so integrals over
/// adjacent windows add up exactly.
pub fn space_time_integral(series: &SnapshotSeries, t_a: f64, t_b: f64, tau: f64, which: Functional) -> Result<f64> {
    let snaps = &series.snapshots;
    if snaps.len() < 2 {
        return Err(domain("at least two snapshots are required"));
    }
    let (first, last) = (snaps[0].t, snaps[snaps.len() - 1].t);
    if !(t_a >= first && t_b <= last && t_a <= t_b) {
        return Err(domain(format!("window [{t_a}, {t_b}] outside snapshots [{first}, {last}]")));
    }
    if tau >= series.grid.radius || t_a == t_b {
        return Ok(0.0);
    }
    let lo = snaps.partition_point(|s| s.t < t_a).saturating_sub(1);
    let hi = (snaps.partition_point(|s| s.t <= t_b) + 1).min(snaps.len());
    let mut dens = Vec::with_capacity(hi - lo);
    for s in &snaps[lo..hi] {
        dens.push((s.t, density(series, &s.values, s.t, tau, which)?));
    }
    let mut knots = vec![(t_a, interpolate(&dens, t_a))];
    knots.extend(dens.iter().copied().filter(|&(t, _)| t > t_a && t < t_b));
    knots.push((t_b, interpolate(&dens, t_b)));
    Ok(knots.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum())
}

/// Piecewise-linear interpolation in sorted knots covering `t`.
fn interpolate(knots: &[(f64, f64)], t: f64) -> f64 {
    let j = knots.partition_point(|k| k.0 < t);
    if j < knots.len() && knots[j].0 == t {
        return knots[j].1;
    }
    let (a, b) = (knots[j - 1], knots[j]);
    let w = (t - a.0) / (b.0 - a.0);
    a.1 * (1.0 - w) + b.1 * w
}

/// `(I1, I2, I3)(r)`: gradient, absorption and L² energy on `ℝ^N × (r, T)`.
pub fn energy_time_tail(series: &SnapshotSeries, r: f64) -> Result<(f64, f64, f64)> {
    let t_end = series.snapshots.last().map(|s| s.t).ok_or_else(|| domain("empty series"))?;
    if !(r < t_end) {
        return Err(domain(format!("window [{r}, {t_end}] is empty")));
    }
    Ok((
        space_time_integral(series, r, t_end, 0.0, Functional::GradSq)?,
        space_time_integral(series, r, t_end, 0.0, Functional::Absorption)?,
        space_time_integral(series, r, t_end, 0.0, Functional::Square)?,
    ))
}

/// `(E1, E2, f)(r, τ)`: gradient and L² energy on `{|x| > τ} × (0, r)` and `∫_{|x|>τ} u(x, r)²`.
pub fn energy_space_tail(series: &SnapshotSeries, r: f64, tau: f64) -> Result<(f64, f64, f64)> {
    if !(tau >= 0.0) {
        return Err(domain(format!("tau must be nonnegative, got {tau}")));
    }
    let t0 = series.snapshots.first().map(|s| s.t).ok_or_else(|| domain("empty series"))?;
    if tau >= series.grid.radius {
        return Ok((0.0, 0.0, 0.0));
    }
    let values = values_at(series, r)?;
    let f_tail = space_integrals(&series.grid, &values, series.spec.q, tau).sq;
    Ok((
        space_time_integral(series, t0, r, tau, Functional::GradSq)?,
        space_time_integral(series, t0, r, tau, Functional::Square)?,
        f_tail,
    ))
}

/// `sup_t ∫_{|x|>δ} u_k²` over the stored snapshots, per run.
pub fn uniform_tail_bound(sweep: &[SnapshotSeries], delta: f64) -> Result<Vec<(f64, f64)>> {
    let Some(first) = sweep.first() else {
        return Ok(Vec::new());
    };
    if !(delta >= 0.0 && delta < first.grid.radius) {
        return Err(domain(format!("delta = {delta} must lie in [0, R)")));
    }
    let times = first.times();
    let mut out = Vec::with_capacity(sweep.len());
    for s in sweep {
        if s.grid.edges != first.grid.edges || s.grid.dim_n != first.grid.dim_n {
            return Err(domain(format!("run k={} uses a different grid", s.k)));
        }
        if s.times() != times {
            return Err(domain(format!("run k={} uses a different snapshot schedule", s.k)));
        }
        let sup = s
            .snapshots
            .iter()
            .map(|st| space_integrals(&s.grid, &st.values, s.spec.q, delta).sq)
            .fold(0.0, f64::max);
        out.push((s.k, sup));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailMass {
    pub delta: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub r_values: Vec<f64>,
    pub i1: Vec<f64>,
    pub i2: Vec<f64>,
    pub i3: Vec<f64>,
    /// Individual series terms `l = 1, 2, 3` of `I2` when `g(u) = e^u − 1`.
    pub i2_terms: Option<Vec<[f64; EXP_SERIES_TERMS]>>,
    pub tau_values: Vec<f64>,
    /// Indexed `[r][τ]`.
    pub e1: Vec<Vec<f64>>,
    pub e2: Vec<Vec<f64>>,
    pub f_tail: Vec<Vec<f64>>,
    pub sup_tail_mass: Vec<TailMass>,
}

pub fn energy_report(series: &SnapshotSeries, r_values: &[f64], tau_values: &[f64], deltas: &[f64]) -> Result<EnergyReport> {
    let mut rep = EnergyReport {
        r_values: r_values.to_vec(),
        i1: Vec::new(),
        i2: Vec::new(),
        i3: Vec::new(),
        i2_terms: None,
        tau_values: tau_values.to_vec(),
        e1: Vec::new(),
        e2: Vec::new(),
        f_tail: Vec::new(),
        sup_tail_mass: Vec::new(),
    };
    let t_end = series.snapshots.last().map(|s| s.t).unwrap_or(0.0);
    let exp = series.spec.nonlinearity == Nonlinearity::ExpMinusOne;
    let mut terms = Vec::new();
    for &r in r_values {
        let (a, b, c) = energy_time_tail(series, r)?;
        rep.i1.push(a);
        rep.i2.push(b);
        rep.i3.push(c);
        if exp {
            let mut t = [0.0; EXP_SERIES_TERMS];
            for (l, slot) in t.iter_mut().enumerate() {
                *slot = space_time_integral(series, r, t_end, 0.0, Functional::ExpTerm(l + 1))?;
            }
            terms.push(t);
        }
        let mut row1 = Vec::new();
        let mut row2 = Vec::new();
        let mut rowf = Vec::new();
        for &tau in tau_values {
            let (e1, e2, f) = energy_space_tail(series, r, tau)?;
            row1.push(e1);
            row2.push(e2);
            rowf.push(f);
        }
        rep.e1.push(row1);
        rep.e2.push(row2);
        rep.f_tail.push(rowf);
    }
    if exp {
        rep.i2_terms = Some(terms);
    }
    for &delta in deltas {
        let v = uniform_tail_bound(std::slice::from_ref(series), delta)?;
        rep.sup_tail_mass.push(TailMass { delta, value: v[0].1 });
    }
    Ok(rep)
}
