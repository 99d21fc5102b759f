//! Dormand–Prince 5(4) with step control, for small autonomous-in-shape systems.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: [f64; 2],
    pub h_max: f64,
    pub h_min: f64,
}

/// Outcome of [`advance`].
#[derive(Debug, Clone, Copy)]
pub struct Advance {
    pub r: f64,
    pub y: [f64; 2],
    /// Step size to try next.
    pub h: f64,
    /// The monitor asked to stop before `r_end`.
    pub stopped: bool,
}

fn attempt<F: Fn(f64, &[f64; 2]) -> [f64; 2]>(rhs: &F, r: f64, y: &[f64; 2], h: f64) -> ([f64; 2], [f64; 2]) {
    let mut k = [[0.0; 2]; 7];
    for s in 0..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            for d in 0..2 {
                ys[d] += h * A[s][j] * kj[d];
            }
        }
        k[s] = rhs(r + C[s] * h, &ys);
    }
    let mut y5 = *y;
    let mut err = [0.0; 2];
    for s in 0..7 {
        for d in 0..2 {
            y5[d] += h * B5[s] * k[s][d];
            err[d] += h * (B5[s] - B4[s]) * k[s][d];
        }
    }
    (y5, err)
}

/// Integrates from `r` to `r_end` exactly. `monitor(r, y)` runs after every accepted
/// step and returns `true` to stop.
pub fn advance<F, M>(rhs: &F, r: f64, y: [f64; 2], r_end: f64, h0: f64, ctl: &StepControl, mut monitor: M) -> Result<Advance>
where
    F: Fn(f64, &[f64; 2]) -> [f64; 2],
    M: FnMut(f64, &[f64; 2]) -> bool,
{
    let mut r = r;
    let mut y = y;
    let mut h = h0.min(ctl.h_max).max(ctl.h_min);
    while r < r_end {
        let last = r + h >= r_end;
        let step = if last { r_end - r } else { h };
        let (y_new, err) = attempt(rhs, r, &y, step);
        let mut norm: f64 = 0.0;
        for d in 0..2 {
            let sc = ctl.atol[d] + ctl.rtol * y[d].abs().max(y_new[d].abs());
            norm = norm.max(err[d].abs() / sc);
        }
        if !norm.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            if step <= ctl.h_min {
                return Err(Error::Numerical { message: format!("non-finite ODE state at r={r}"), partial: y[0] });
            }
            h = (0.25 * step).max(ctl.h_min);
            continue;
        }
        if norm <= 1.0 || step <= ctl.h_min {
            r = if last { r_end } else { r + step };
            y = y_new;
            let grow = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
            if !last {
                h = (step * grow).min(ctl.h_max);
            } else {
                h = h.max(step * grow.min(1.0)).min(ctl.h_max);
            }
            if monitor(r, &y) {
                return Ok(Advance { r, y, h, stopped: true });
            }
        } else {
            h = (step * (0.9 * norm.powf(-0.25)).max(0.2)).max(ctl.h_min);
        }
    }
    Ok(Advance { r, y, h, stopped: false })
}
