use serde::{Deserialize, Serialize};

use super::floor::ln_subsolution_floor;
use super::{Scenario, Thresholds};
use crate::analytic::{exp_bound, universal_bound};
use crate::energetics::uniform_tail_bound;
use crate::error::{domain, Result};
use crate::model::Nonlinearity;
use crate::solver::SnapshotSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    CompleteBlowup,
    SinglePointBlowup,
    Undecided,
}

/// `ρ(k) = u_k(x_p, t_p)/U(t_p)` and its fit `ρ ≈ limit + slope/ln k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioEvidence {
    pub probe: f64,
    pub t_probe: f64,
    /// `null` when the bound is infinite.
    pub bound: Option<f64>,
    pub k: Vec<f64>,
    pub rho: Vec<f64>,
    /// `null` when fewer than two runs have `k > 1`.
    pub limit: Option<f64>,
    pub slope: Option<f64>,
    pub increasing: bool,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub k: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEvidence {
    pub delta: f64,
    pub values: Vec<TailPoint>,
    pub k_max: f64,
    pub k_mid: f64,
    /// `value(k_max)/value(k_mid)`; `null` when undefined.
    pub stabilization_ratio: Option<f64>,
    pub passes: bool,
}

/// `u_{k_max}(x_p, t)` over the probe times, in decreasing `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayEvidence {
    pub probe: f64,
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    pub decreasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloorEvidence {
    pub probe: f64,
    pub t: f64,
    /// Natural log of the floor (it overflows `f64` quickly).
    pub ln_floor: f64,
    pub u: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub ratio_to_bound: Vec<RatioEvidence>,
    pub tail: TailEvidence,
    pub decay: Vec<DecayEvidence>,
    pub floor: Vec<FloorEvidence>,
    pub complete_battery: bool,
    pub single_point_battery: bool,
    /// `ρ(k)` increases in `k` at every probe and probe time.
    pub increasing_evidence: bool,
    /// The tail ratio alone is within the stabilization threshold.
    pub stabilizing_evidence: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationVerdict {
    pub verdict: Verdict,
    pub evidence: Evidence,
    pub thresholds: Thresholds,
    pub notes: Vec<String>,
}

/// Least squares `y ≈ a + b x`.
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return (my, 0.0);
    }
    let b = sxy / sxx;
    (my - b * mx, b)
}

fn bound_at(scenario: &Scenario, t: f64) -> Result<f64> {
    match scenario.spec.nonlinearity {
        Nonlinearity::PowerQ => universal_bound(&scenario.spec, t),
        Nonlinearity::ExpMinusOne => exp_bound(&scenario.spec.absorption, t),
    }
}

/// Three-valued blow-up classification of a k-sweep. Runs that carry a failure marker are
/// ignored; at least three completed runs are required.
pub fn classify_blowup(sweep: &[SnapshotSeries], scenario: &Scenario) -> Result<ClassificationVerdict> {
    let mut runs: Vec<&SnapshotSeries> = sweep.iter().filter(|s| s.failure.is_none()).collect();
    runs.sort_by(|a, b| a.k.total_cmp(&b.k));
    if runs.len() < 3 {
        return Err(domain(format!("classification needs at least 3 completed runs, got {}", runs.len())));
    }
    if scenario.probes.is_empty() || scenario.t_probe_list.is_empty() {
        return Err(domain("classification needs probes and probe times"));
    }
    scenario.check_probes(runs[0].grid.radius)?;
    let th = scenario.thresholds;
    let mut notes = Vec::new();
    let dropped = sweep.len() - runs.len();
    if dropped > 0 {
        notes.push(format!("{dropped} run(s) with a failure marker excluded"));
    }
    if runs.iter().any(|s| !s.truncation_ok()) {
        notes.push("boundary mass above tolerance in at least one run; truncation may bias the tails".into());
    }

    let fit_runs: Vec<&&SnapshotSeries> = runs.iter().filter(|s| s.k > 1.0).collect();
    if fit_runs.len() < runs.len() {
        notes.push("runs with k <= 1 excluded from the 1/ln k fit".into());
    }
    let mut ratio = Vec::new();
    for &x in &scenario.probes {
        for &t in &scenario.t_probe_list {
            let bound = bound_at(scenario, t)?;
            let mut rho = Vec::with_capacity(runs.len());
            for s in &runs {
                let u = s.value_at(x, t)?;
                rho.push(if bound.is_finite() { u / bound } else { 0.0 });
            }
            let increasing = rho.windows(2).all(|w| w[1] > w[0]);
            let (limit, slope) = if fit_runs.len() >= 2 {
                let xs: Vec<f64> = fit_runs.iter().map(|s| 1.0 / s.k.ln()).collect();
                let ys: Vec<f64> = runs
                    .iter()
                    .zip(&rho)
                    .filter(|(s, _)| s.k > 1.0)
                    .map(|(_, r)| *r)
                    .collect();
                let (a, b) = linear_fit(&xs, &ys);
                (Some(a), Some(b))
            } else {
                (None, None)
            };
            let passes = increasing && limit.is_some_and(|a| a >= th.complete_limit);
            ratio.push(RatioEvidence {
                probe: x,
                t_probe: t,
                bound: Some(bound).filter(|b| b.is_finite()),
                k: runs.iter().map(|s| s.k).collect(),
                rho,
                limit,
                slope,
                increasing,
                passes,
            });
        }
    }

    let owned: Vec<SnapshotSeries> = runs.iter().map(|s| (*s).clone()).collect();
    let tails = uniform_tail_bound(&owned, scenario.delta)?;
    let (k_max, v_max) = tails[tails.len() - 1];
    let (k_mid, v_mid) = tails[tails.len() - 2];
    let stabilization_ratio = if v_mid > 0.0 {
        Some(v_max / v_mid)
    } else if v_max == 0.0 {
        Some(1.0)
    } else {
        None
    };
    let stabilizing = stabilization_ratio.is_some_and(|r| r <= th.stabilization);
    let top = runs[runs.len() - 1];
    let mut decay = Vec::new();
    for &x in &scenario.probes {
        let u: Vec<f64> = scenario.t_probe_list.iter().map(|&t| top.value_at(x, t)).collect::<Result<_>>()?;
        let decreasing = u.len() >= 2 && u.windows(2).all(|w| w[1] < w[0]);
        decay.push(DecayEvidence { probe: x, t: scenario.t_probe_list.clone(), u, decreasing });
    }
    if scenario.t_probe_list.len() < 2 {
        notes.push("decay along t needs at least two probe times".into());
    }

    let complete = ratio.iter().all(|r| r.passes);
    let all_below = ratio.iter().all(|r| r.limit.is_some_and(|a| a < th.complete_limit));
    let single = stabilizing && decay.iter().all(|d| d.decreasing) && all_below;
    assert!(!(complete && single), "classifier batteries must be mutually exclusive");

    let mut floor = Vec::new();
    if let Some(fc) = scenario.floor {
        for &x in &scenario.probes {
            for &t in &scenario.t_probe_list {
                if t > fc.epsilon {
                    continue;
                }
                match ln_subsolution_floor(&scenario.spec, fc.epsilon, x, t, fc.constant) {
                    Ok(ln_floor) => {
                        let u = top.value_at(x, t)?;
                        let passes = u > 0.0 && u.ln() >= th.floor_fraction.ln() + ln_floor;
                        floor.push(FloorEvidence { probe: x, t, ln_floor, u, passes });
                    }
                    Err(e) => notes.push(format!("floor not evaluated at x={x}, t={t}: {e}")),
                }
            }
        }
    }
    let floor_ok = floor.iter().all(|f| f.passes);

    let tail = TailEvidence {
        delta: scenario.delta,
        values: tails.iter().map(|&(k, value)| TailPoint { k, value }).collect(),
        k_max,
        k_mid,
        stabilization_ratio,
        passes: stabilizing,
    };
    let increasing_evidence = ratio.iter().all(|r| r.increasing);
    let verdict = if complete && floor_ok {
        Verdict::CompleteBlowup
    } else if single {
        Verdict::SinglePointBlowup
    } else {
        Verdict::Undecided
    };
    if complete && !floor_ok {
        notes.push(format!(
            "ratio battery passed but u_kmax stays below {} of the subsolution floor",
            th.floor_fraction
        ));
    }
    if verdict == Verdict::Undecided {
        if increasing_evidence {
            notes.push("rho(k) increases at every probe but its extrapolated limit is below threshold".into());
        }
        if stabilizing && !single {
            notes.push("tail bound stabilizes but the decay or ratio conditions fail".into());
        }
    }
    Ok(ClassificationVerdict {
        verdict,
        evidence: Evidence {
            ratio_to_bound: ratio,
            tail,
            decay,
            floor,
            complete_battery: complete,
            single_point_battery: single,
            increasing_evidence,
            stabilizing_evidence: stabilizing,
        },
        thresholds: th,
        notes,
    })
}

impl ClassificationVerdict {
    /// Canonical JSON; non-finite numbers become `null`.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{GridSpec, RhoRule};
    use crate::model::{AbsorptionLaw, ModelSpec};
    use crate::solver::{FieldState, RadialGrid, RunStats, SolverConfig, TimeSchedule};

    fn scenario(spec: ModelSpec) -> Scenario {
        Scenario {
            name: "synthetic".into(),
            spec,
            grid: GridSpec { radius: 4.0, n_cells: 200, stretch: None, min_support_cells: 4 },
            k_list: vec![16.0, 64.0, 256.0, 1024.0],
            rho: RhoRule::Fixed { rho: 0.1 },
            schedule: TimeSchedule::geometric(0.0, 0.2, 1.05, 100, vec![0.2]),
            probes: vec![0.2, 0.4],
            t_probe_list: vec![0.1, 0.05, 0.02],
            delta: 0.25,
            solver: SolverConfig::default(),
            thresholds: Thresholds::default(),
            floor: None,
        }
    }

    fn synthetic<F: Fn(f64, f64, f64) -> f64>(sc: &Scenario, u: F) -> Vec<SnapshotSeries> {
        let grid = RadialGrid::uniform(1, sc.grid.radius, sc.grid.n_cells).unwrap();
        let times = [0.01, 0.02, 0.05, 0.1, 0.2];
        sc.k_list
            .iter()
            .map(|&k| SnapshotSeries {
                spec: sc.spec,
                grid: grid.clone(),
                k,
                rho: 0.1,
                snapshots: times
                    .iter()
                    .map(|&t| {
                        let v = grid.centers.iter().map(|&r| u(k, r, t)).collect();
                        FieldState::new(t, v, &grid).unwrap()
                    })
                    .collect(),
                probes: vec![],
                traces: vec![],
                stats: RunStats::default(),
                boundary_mass_fraction: 0.0,
                failure: None,
            })
            .collect()
    }

    fn semilinear() -> ModelSpec {
        ModelSpec::power(1, 1.0, 2.0, AbsorptionLaw::ExpInv { kappa: 1.0 }, 1.0).unwrap()
    }

    #[test]
    fn constructed_complete_sweep() {
        let sc = scenario(semilinear());
        let sweep = synthetic(&sc, |k, _, t| universal_bound(&sc.spec, t).unwrap() * (1.0 - 1.0 / k.ln()));
        let v = classify_blowup(&sweep, &sc).unwrap();
        assert_eq!(v.verdict, Verdict::CompleteBlowup);
        for r in &v.evidence.ratio_to_bound {
            assert!((r.limit.unwrap() - 1.0).abs() < 1e-9 && (r.slope.unwrap() + 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn constructed_single_point_sweep() {
        let sc = scenario(semilinear());
        // k-independent beyond k = 64 and vanishing off the origin as t -> 0.
        let sweep = synthetic(&sc, |k, r, t| k.min(64.0) * t * (-r * r / (4.0 * t)).exp());
        let v = classify_blowup(&sweep, &sc).unwrap();
        assert_eq!(v.verdict, Verdict::SinglePointBlowup);
        assert_eq!(v.evidence.tail.stabilization_ratio, Some(1.0));
    }

    #[test]
    fn growing_tails_are_undecided() {
        let sc = scenario(semilinear());
        let sweep = synthetic(&sc, |k, r, t| k * (-r * r / (4.0 * t)).exp() / t.sqrt());
        let v = classify_blowup(&sweep, &sc).unwrap();
        assert_eq!(v.verdict, Verdict::Undecided);
        assert!(v.evidence.increasing_evidence);
        assert!(!v.evidence.stabilizing_evidence);
    }

    #[test]
    fn failed_floor_downgrades_complete() {
        let mut sc = scenario(semilinear());
        sc.probes = vec![0.2];
        sc.floor = Some(crate::experiments::FloorCheck { constant: 1e6, epsilon: 0.2 });
        let sweep = synthetic(&sc, |k, _, t| universal_bound(&sc.spec, t).unwrap() * (1.0 - 1.0 / k.ln()));
        let v = classify_blowup(&sweep, &sc).unwrap();
        assert!(v.evidence.complete_battery);
        assert!(v.evidence.floor.iter().any(|f| !f.passes));
        assert_eq!(v.verdict, Verdict::Undecided);
    }

    #[test]
    fn probes_outside_grid_are_rejected() {
        let mut sc = scenario(semilinear());
        let sweep = synthetic(&sc, |_, _, _| 1.0);
        sc.probes = vec![10.0];
        assert!(classify_blowup(&sweep, &sc).is_err());
    }

    #[test]
    fn verdict_json_is_deterministic() {
        let sc = scenario(semilinear());
        let sweep = synthetic(&sc, |k, r, t| k * (-r * r / (4.0 * t)).exp());
        let a = classify_blowup(&sweep, &sc).unwrap().to_json().unwrap();
        let b = classify_blowup(&sweep, &sc).unwrap().to_json().unwrap();
        assert_eq!(a, b);
        let back: ClassificationVerdict = serde_json::from_str(&a).unwrap();
        assert_eq!(back.verdict, Verdict::Undecided);
    }
}
