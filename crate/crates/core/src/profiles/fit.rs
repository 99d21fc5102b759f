use super::{Classification, ProfileProblem, ProfileSolution};
use crate::error::{Error, Result};

const TINY: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticFit {
    pub exponent: f64,
    pub constant: f64,
    pub lower_bound_constant: f64,
}

/// Least squares of `ln f + r²/4` against `ln r` on `[0.6, 0.9]·r_max`.
pub fn fit_asymptotics(sol: &ProfileSolution, prob: &ProfileProblem) -> Result<AsymptoticFit> {
    if sol.classification != Classification::FastDecay {
        return Err(Error::Domain(format!("fit needs a fast-decay profile, got {:?}", sol.classification)));
    }
    let (lo, hi) = (0.6 * prob.r_max, 0.9 * prob.r_max);
    let pts: Vec<(f64, f64)> = sol
        .xi
        .iter()
        .zip(&sol.f)
        .filter(|(r, f)| **r >= lo && **r <= hi && **f > TINY)
        .map(|(&r, &f)| (r, f))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Numerical {
            message: format!("fit window [{lo}, {hi}] holds {} usable points", pts.len()),
            partial: f64::NAN,
        });
    }
    let n = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|(r, _)| r.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|(r, f)| f.ln() + 0.25 * r * r).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let e = prob.decay_exponent();
    let lower = pts
        .iter()
        .map(|(r, f)| (f.ln() - e * (1.0 + r).ln() + 0.25 * r * r).exp())
        .fold(f64::INFINITY, f64::min);
    Ok(AsymptoticFit { exponent: slope, constant: intercept.exp(), lower_bound_constant: lower })
}
