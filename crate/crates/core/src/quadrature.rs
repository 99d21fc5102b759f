//! Adaptive Gauss–Kronrod quadrature and a few log-space helpers.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

pub(crate) const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
pub(crate) const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Estimate {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    Estimate {
        value: kron * h,
        error: ((kron - gauss) * h).abs(),
    }
}

/// Globally adaptive GK15 on `[a, b]`. Stops when the summed error estimate drops below
/// `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    const MAX_SEGMENTS: usize = 4000;
    let mut segs: Vec<(f64, f64, Estimate)> = vec![(a, b, gk15(&f, a, b))];
    loop {
        let total: f64 = segs.iter().map(|s| s.2.value).sum();
        let err: f64 = segs.iter().map(|s| s.2.error).sum();
        if !total.is_finite() {
            return Err(Error::Numerical {
                message: "non-finite integrand".into(),
                partial: total,
            });
        }
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(Estimate { value: total, error: err });
        }
        if segs.len() >= MAX_SEGMENTS {
            return Err(Error::Numerical {
                message: format!("quadrature did not converge on [{a:e}, {b:e}] (error {err:e})"),
                partial: total,
            });
        }
        let (idx, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2.error.total_cmp(&y.1 .2.error))
            .expect("non-empty");
        let (lo, hi, _) = segs.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            return Err(Error::Numerical {
                message: "quadrature interval underflow".into(),
                partial: total,
            });
        }
        segs.push((lo, mid, gk15(&f, lo, mid)));
        segs.push((mid, hi, gk15(&f, mid, hi)));
    }
}

/// Integral over `[0, ∞)` of a positive integrand that decreases monotonically,
/// starting with a panel of width `w0` and doubling panel widths. `decay_bound(z)`
/// must bound the remaining tail `∫_z^∞` from above.
pub fn integrate_decaying<F, B>(f: F, decay_bound: B, w0: f64, rel_tol: f64) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
    B: Fn(f64) -> f64,
{
    let mut lo = 0.0;
    let mut w = w0;
    let mut total = 0.0;
    let mut err = 0.0;
    for _ in 0..200 {
        let hi = lo + w;
        let est = integrate(&f, lo, hi, rel_tol, 0.0)?;
        total += est.value;
        err += est.error;
        lo = hi;
        w *= 2.0;
        let tail = decay_bound(lo);
        if tail <= 1e-17 * total || (total == 0.0 && tail == 0.0) {
            return Ok(Estimate { value: total, error: err + tail });
        }
    }
    Err(Error::Numerical {
        message: "semi-infinite quadrature did not terminate".into(),
        partial: total,
    })
}

/// `ln(Σ exp(x_i))` computed without overflow.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Trapezoid rule on a sampled function.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_is_exact_for_high_degree_polynomials() {
        let est = gk15(&|x: f64| x.powi(20), -1.0, 1.0);
        assert!((est.value - 2.0 / 21.0).abs() < 1e-14);
        let est = gk15(&|x: f64| x.powi(12) + 3.0 * x.powi(5), 0.0, 1.0);
        assert!((est.value - (1.0 / 13.0 + 0.5)).abs() < 1e-14);
        // Gauss-7 is exact to degree 13, so the error estimate vanishes there.
        assert!(est.error < 1e-14);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let est = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, 1e-10, 0.0).unwrap();
        assert!((est.value - 2.0).abs() < 1e-8);
    }

    #[test]
    fn semi_infinite_exponential() {
        let est = integrate_decaying(|z: f64| (-z).exp(), |z: f64| (-z).exp(), 0.5, 1e-12).unwrap();
        assert!((est.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gl5_integrates_degree_nine() {
        let v: f64 = GL5_NODES.iter().zip(GL5_WEIGHTS).map(|(x, w)| w * x.powi(8)).sum();
        assert!((v - 2.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn lse_survives_huge_arguments() {
        let v = log_sum_exp(&[-1e300, -1e300 + 2f64.ln()]);
        assert_eq!(v, -1e300);
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }
}
