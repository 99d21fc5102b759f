//! `f'' + ((N−1)/r + r/2) f' + λ f − f^q = 0`, `λ = (1+α)/(q−1)`, `f'(0) = 0`.

use super::rk::{advance, StepControl};
use super::{bisect, fit_asymptotics, Classification, ProfileKind, ProfileProblem, ProfileSolution, ShootingConfig};
use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy)]
enum Outcome {
    Crossing,
    Above,
    /// Reached `r_max`: final `f'/f` and the midpoint between the two asymptotic branches.
    Reached { w: f64, w_mid: f64 },
}

impl Outcome {
    fn below(self) -> bool {
        match self {
            Outcome::Crossing => true,
            Outcome::Above => false,
            Outcome::Reached { w, w_mid } => w < w_mid,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Outcome::Crossing => "crossing",
            Outcome::Above => "slow decay",
            Outcome::Reached { .. } => "undetermined",
        }
    }
}

struct Trajectory {
    xi: Vec<f64>,
    f: Vec<f64>,
    outcome: Outcome,
}

struct Shooter<'a> {
    prob: &'a ProfileProblem,
    cfg: &'a ShootingConfig,
    lambda: f64,
    p: f64,
    r_check: f64,
}

impl<'a> Shooter<'a> {
    fn new(prob: &'a ProfileProblem, cfg: &'a ShootingConfig) -> Result<Self> {
        let lambda = (1.0 + prob.alpha) / (prob.q - 1.0);
        let p = 2.0 * lambda;
        let n = prob.dim_n as f64;
        // Beyond this radius the branches −r/2 + (p−N)/r and −p/r are well separated.
        let r_check = 2.0 * (2.0 * (2.0 * p - n)).max(0.0).sqrt() + 1.0;
        if prob.r_max <= r_check {
            return Err(domain(format!(
                "r_max = {} too small to separate decay branches; need r_max > {r_check:.3}",
                prob.r_max
            )));
        }
        Ok(Shooter { prob, cfg, lambda, p, r_check })
    }

    fn branches(&self, r: f64) -> (f64, f64) {
        let n = self.prob.dim_n as f64;
        (-0.5 * r + (self.p - n) / r, -self.p / r)
    }

    fn run(&self, a: f64, early_exit: bool) -> Result<Trajectory> {
        let prob = self.prob;
        let cfg = self.cfg;
        let n = prob.dim_n as f64;
        let (q, lambda) = (prob.q, self.lambda);
        let raw = move |r: f64, y: &[f64; 2]| {
            let f = y[0];
            let g = f.abs().powf(q) * f.signum();
            [y[1], -((n - 1.0) / r + 0.5 * r) * y[1] - lambda * f + g]
        };
        let logv = move |r: f64, y: &[f64; 2]| {
            let w = y[1];
            [w, -((n - 1.0) / r + 0.5 * r) * w - lambda + ((q - 1.0) * y[0]).exp() - w * w]
        };
        let n_out = ((prob.r_max / cfg.grid_spacing).round() as usize).max(1);
        let grid = |j: usize| prob.r_max * j as f64 / n_out as f64;
        let r0 = cfg.start_fraction * prob.r_max.max(1.0);
        let s = (a.powf(q) - lambda * a) / n;
        let mut y = [a + 0.5 * s * r0 * r0, s * r0];
        let mut xi = vec![0.0];
        let mut fv = vec![a];
        if s > 0.0 {
            return Ok(Trajectory { xi, f: fv, outcome: Outcome::Above });
        }
        let raw_ctl = StepControl { rtol: cfg.rtol_near, atol: [1e-18 * a, 1e-18 * a], h_max: cfg.grid_spacing, h_min: 1e-13 };
        let log_ctl = StepControl { rtol: cfg.rtol_far, atol: [1e-12, 1e-12], h_max: cfg.grid_spacing, h_min: 1e-13 };
        let mut in_log = false;
        let mut r = r0;
        let mut h = 1e-3 * cfg.grid_spacing;
        let mut verdict: Option<Outcome> = None;
        for j in 1..=n_out {
            let target = grid(j);
            if target <= r {
                continue;
            }
            let r_check = self.r_check;
            let monitor = |rr: f64, yy: &[f64; 2], in_log: bool, verdict: &mut Option<Outcome>| -> bool {
                let (f_pos, w) = if in_log { (true, yy[1]) } else { (yy[0] > 0.0, yy[1] / yy[0]) };
                if !f_pos || (in_log && w < -1e4) {
                    *verdict = Some(Outcome::Crossing);
                    return true;
                }
                if w > 0.0 {
                    *verdict = Some(Outcome::Above);
                    return true;
                }
                if early_exit && rr >= r_check {
                    let (fast, slow) = self.branches(rr);
                    let mid = 0.5 * (fast + slow);
                    if w > mid {
                        *verdict = Some(Outcome::Above);
                        return true;
                    }
                    if w < fast - 0.5 * (slow - fast) {
                        *verdict = Some(Outcome::Crossing);
                        return true;
                    }
                }
                false
            };
            let out = if in_log {
                advance(&logv, r, y, target, h, &log_ctl, |rr, yy| monitor(rr, yy, true, &mut verdict))
            } else {
                advance(&raw, r, y, target, h, &raw_ctl, |rr, yy| monitor(rr, yy, false, &mut verdict))
            };
            let out = match out {
                Ok(o) => o,
                // Step-size collapse happens only as f → 0 along a crossing.
                Err(Error::Numerical { .. }) => {
                    verdict = Some(Outcome::Crossing);
                    break;
                }
                Err(e) => return Err(e),
            };
            if out.stopped {
                break;
            }
            r = out.r;
            y = out.y;
            h = out.h;
            xi.push(r);
            fv.push(if in_log { y[0].exp() } else { y[0] });
            if !in_log && y[0] < cfg.log_switch * a {
                y = [y[0].ln(), y[1] / y[0]];
                in_log = true;
            }
        }
        let outcome = match verdict {
            Some(v) => v,
            None => {
                let w = if in_log { y[1] } else { y[1] / y[0] };
                let (fast, slow) = self.branches(prob.r_max);
                Outcome::Reached { w, w_mid: 0.5 * (fast + slow) }
            }
        };
        Ok(Trajectory { xi, f: fv, outcome })
    }
}

/// Shoots on `f(0)` for the profile with Gaussian decay.
pub fn shoot_semilinear_vss(prob: &ProfileProblem, cfg: &ShootingConfig) -> Result<ProfileSolution> {
    if prob.kind != ProfileKind::SemilinearVss {
        return Err(domain("expected a semilinear profile problem"));
    }
    prob.validate()?;
    let sh = Shooter::new(prob, cfg)?;
    let c0 = sh.lambda.powf(1.0 / (prob.q - 1.0));
    let (lo_end, hi_end) = (c0 / cfg.bracket_factor, c0 * cfg.bracket_factor);
    let lo_out = sh.run(lo_end, true)?.outcome;
    let hi_out = sh.run(hi_end, true)?.outcome;
    if lo_out.below() == hi_out.below() {
        return Err(Error::Bracket { lo: lo_out.name().into(), hi: hi_out.name().into() });
    }
    let lo_below = lo_out.below();
    let same_as_lo = |a: f64| -> Result<bool> { Ok(sh.run(a, true)?.outcome.below() == lo_below) };
    let (lo, hi, n1) = bisect(lo_end, hi_end, prob.tol, cfg.max_bisections, same_as_lo)?;
    let shoot_value = 0.5 * (lo + hi);
    let (plo, phi, n2) = if cfg.polish {
        bisect(lo, hi, 1e-16, cfg.max_bisections, same_as_lo)?
    } else {
        (lo, hi, 0)
    };
    // Report the trajectory on the non-crossing side so f stays nonnegative.
    let a_grid = if lo_below { phi } else { plo };
    let traj = sh.run(a_grid, false)?;
    let mut sol = ProfileSolution {
        shoot_value,
        xi: traj.xi,
        f: traj.f,
        classification: Classification::FastDecay,
        support_radius: None,
        fitted_exponent: None,
        fitted_constant: None,
        lower_bound_constant: None,
        bracket: (lo.min(hi), lo.max(hi)),
        bisections: n1 + n2,
    };
    if let Ok(fit) = fit_asymptotics(&sol, prob) {
        sol.fitted_exponent = Some(fit.exponent);
        sol.fitted_constant = Some(fit.constant);
        sol.lower_bound_constant = Some(fit.lower_bound_constant);
    }
    Ok(sol)
}

/// Central-difference residual of the profile equation at interior grid points.
pub fn semilinear_residual(prob: &ProfileProblem, xi: &[f64], f: &[f64]) -> Vec<f64> {
    let n = prob.dim_n as f64;
    let lambda = (1.0 + prob.alpha) / (prob.q - 1.0);
    (1..xi.len().saturating_sub(1))
        .map(|j| {
            let (hm, hp) = (xi[j] - xi[j - 1], xi[j + 1] - xi[j]);
            let d1 = (f[j + 1] - f[j - 1]) / (hm + hp);
            let d2 = 2.0 * (hp * f[j - 1] - (hm + hp) * f[j] + hm * f[j + 1]) / (hm * hp * (hm + hp));
            let r = xi[j];
            d2 + ((n - 1.0) / r + 0.5 * r) * d1 + lambda * f[j] - f[j].max(0.0).powf(prob.q)
        })
        .collect()
}
