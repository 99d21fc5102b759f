//! `(F^m)'' + ((N−1)/η)(F^m)' + bηF' + F/(q−1) − F^q = 0`, `b = (q−m)/(2(q−1))`,
//! integrated in `G = F^m`.

use super::rk::{advance, StepControl};
use super::{bisect, Classification, ProfileKind, ProfileProblem, ProfileSolution, ShootingConfig};
use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy)]
enum Outcome {
    /// `G` reaches 0 with negative slope at `eta`.
    Crossing { eta: f64 },
    /// `G` and `G'` vanish together; the shooting parameter is accepted.
    Interface { eta: f64 },
    Positive,
}

struct Trajectory {
    g: Vec<f64>,
    outcome: Outcome,
}

fn run(prob: &ProfileProblem, cfg: &ShootingConfig, f0: f64) -> Result<Trajectory> {
    let (m, q) = (prob.m, prob.q);
    let n = prob.dim_n as f64;
    let b = (q - m) / (2.0 * (q - 1.0));
    let rhs = move |eta: f64, y: &[f64; 2]| {
        let g = y[0].max(0.0);
        let gp = y[1];
        let transport = if g > 0.0 { b * eta * g.powf(1.0 / m - 1.0) * gp / m } else { 0.0 };
        [gp, -(n - 1.0) / eta * gp - transport - g.powf(1.0 / m) / (q - 1.0) + g.powf(q / m)]
    };
    let g0 = f0.powf(m);
    let s = (f0.powf(q) - f0 / (q - 1.0)) / n;
    let eta0 = cfg.start_fraction * prob.r_max.max(1.0);
    let mut y = [g0 + 0.5 * s * eta0 * eta0, s * eta0];
    let mut gv = vec![g0];
    if s >= 0.0 {
        return Ok(Trajectory { g: gv, outcome: Outcome::Positive });
    }
    let ctl = StepControl { rtol: cfg.rtol_near, atol: [1e-16 * g0, 1e-16 * g0], h_max: cfg.grid_spacing, h_min: 1e-13 };
    let n_out = ((prob.r_max / cfg.grid_spacing).round() as usize).max(1);
    let mut eta = eta0;
    let mut h = 1e-3 * cfg.grid_spacing;
    let mut prev = (eta, y);
    // ν = −ηF'/F grows without bound towards an interface and relaxes to 2/(q−m)
    // on the algebraic tail reached by positive trajectories.
    let mut nu_prev = 0.0;
    for j in 1..=n_out {
        let target = prob.r_max * j as f64 / n_out as f64;
        let mut verdict = None;
        let res = advance(&rhs, eta, y, target, h, &ctl, |e, yy| {
            if yy[0] < cfg.interface_value * g0 && yy[1].abs() < cfg.interface_slope * g0 {
                verdict = Some(Outcome::Interface { eta: e });
                return true;
            }
            if yy[0] <= 0.0 {
                // Linear interpolation between the last positive state and this one.
                let (pe, py) = prev;
                let w = py[0] / (py[0] - yy[0]);
                verdict = Some(Outcome::Crossing { eta: pe + w * (e - pe) });
                return true;
            }
            if yy[1] >= 0.0 {
                verdict = Some(Outcome::Positive);
                return true;
            }
            let nu = -e * yy[1] / (m * yy[0]);
            if yy[0] < cfg.tail_level * g0 && nu < nu_prev {
                verdict = Some(Outcome::Positive);
                return true;
            }
            nu_prev = nu;
            prev = (e, *yy);
            false
        });
        match res {
            Ok(out) => {
                if let Some(v) = verdict {
                    return Ok(Trajectory { g: gv, outcome: v });
                }
                eta = out.r;
                y = out.y;
                h = out.h;
                gv.push(y[0]);
            }
            Err(Error::Numerical { .. }) if y[1] < 0.0 => {
                // Steps collapse on the singular approach to G = 0; extrapolate linearly.
                let (pe, py) = prev;
                return Ok(Trajectory { g: gv, outcome: Outcome::Crossing { eta: pe + py[0] / -py[1] } });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Trajectory { g: gv, outcome: Outcome::Positive })
}

/// Shoots on `F(0)` for the compactly supported profile.
pub fn shoot_pme_vss(prob: &ProfileProblem, cfg: &ShootingConfig) -> Result<ProfileSolution> {
    if prob.kind != ProfileKind::PmeVss {
        return Err(domain("expected a PME profile problem"));
    }
    prob.validate()?;
    let fc = (prob.q - 1.0).powf(-1.0 / (prob.q - 1.0));
    let (lo_end, hi_end) = (fc / cfg.bracket_factor, fc * (1.0 + 1e-3));
    let is_cross = |o: Outcome| matches!(o, Outcome::Crossing { .. });
    let lo_out = run(prob, cfg, lo_end)?.outcome;
    let hi_out = run(prob, cfg, hi_end)?.outcome;
    let name = |o: Outcome| match o {
        Outcome::Crossing { .. } => "crossing",
        Outcome::Interface { .. } => "interface",
        Outcome::Positive => "positive",
    };
    if is_cross(lo_out) == is_cross(hi_out) {
        return Err(Error::Bracket { lo: name(lo_out).into(), hi: name(hi_out).into() });
    }
    let lo_cross = is_cross(lo_out);
    let mut accepted: Option<(f64, f64)> = None;
    let mut classify = |a: f64| -> Result<bool> {
        let o = run(prob, cfg, a)?.outcome;
        if let Outcome::Interface { eta } = o {
            accepted.get_or_insert((a, eta));
        }
        Ok(is_cross(o) == lo_cross)
    };
    let (lo, hi, n1) = bisect(lo_end, hi_end, prob.tol, cfg.max_bisections, &mut classify)?;
    let shoot_value = 0.5 * (lo + hi);
    let (plo, phi, n2) = if cfg.polish { bisect(lo, hi, 1e-15, cfg.max_bisections, &mut classify)? } else { (lo, hi, 0) };
    let a_grid = if lo_cross { plo } else { phi };
    let traj = run(prob, cfg, a_grid)?;
    let xi0 = match (accepted, traj.outcome) {
        (_, Outcome::Crossing { eta }) | (_, Outcome::Interface { eta }) => eta,
        (Some((_, eta)), Outcome::Positive) => eta,
        (None, Outcome::Positive) => {
            return Err(Error::Numerical { message: "no interface located".into(), partial: shoot_value })
        }
    };
    let n_out = ((prob.r_max / cfg.grid_spacing).round() as usize).max(1);
    let xi: Vec<f64> = (0..=n_out).map(|j| prob.r_max * j as f64 / n_out as f64).collect();
    let f = xi
        .iter()
        .enumerate()
        .map(|(j, &e)| if e < xi0 && j < traj.g.len() { traj.g[j].max(0.0).powf(1.0 / prob.m) } else { 0.0 })
        .collect();
    Ok(ProfileSolution {
        shoot_value,
        xi,
        f,
        classification: Classification::CompactSupport,
        support_radius: Some(xi0),
        fitted_exponent: None,
        fitted_constant: None,
        lower_bound_constant: None,
        bracket: (lo.min(hi), lo.max(hi)),
        bisections: n1 + n2,
    })
}

/// Central-difference residual of the profile equation at interior points, skipping
/// the two grid cells on either side of the support edge `xi0`.
pub fn pme_residual(prob: &ProfileProblem, xi: &[f64], f: &[f64], xi0: f64) -> Vec<f64> {
    let (m, q) = (prob.m, prob.q);
    let n = prob.dim_n as f64;
    let b = (q - m) / (2.0 * (q - 1.0));
    let g: Vec<f64> = f.iter().map(|v| v.powf(m)).collect();
    (1..xi.len().saturating_sub(1))
        .filter(|&j| xi[j] < xi0 - 2.0 * (xi[j + 1] - xi[j]))
        .map(|j| {
            let h = 0.5 * (xi[j + 1] - xi[j - 1]);
            let d1g = (g[j + 1] - g[j - 1]) / (2.0 * h);
            let d2g = (g[j + 1] - 2.0 * g[j] + g[j - 1]) / (h * h);
            let d1f = (f[j + 1] - f[j - 1]) / (2.0 * h);
            d2g + (n - 1.0) / xi[j] * d1g + b * xi[j] * d1f + f[j] / (q - 1.0) - f[j].powf(q)
        })
        .collect()
}
