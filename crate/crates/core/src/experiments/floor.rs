use crate::error::{domain, Error, Result};
use crate::model::{AbsorptionLaw, ModelSpec, Nonlinearity};
use crate::profiles::ProfileProblem;

/// Power `n` of the auxiliary absorption `c_n t^{α_n} v^n` used for the exponential floor.
pub const FLOOR_POWER: f64 = 3.0;

/// The shooting problem whose `lower_bound_constant` is the floor constant.
///
/// Power case: the very singular profile with `α = 0`. Exponential case: the profile of
/// `Δf + ½ξ·∇f + (N+2)/2 f − f^n = 0`, i.e. `α = (N+2)(n−1)/2 − 1`, whose decay exponent is 2.
pub fn floor_profile_problem(spec: &ModelSpec, r_max: f64, tol: f64) -> Result<ProfileProblem> {
    check_regime(spec)?;
    let n = spec.dim_n as f64;
    Ok(match spec.nonlinearity {
        Nonlinearity::PowerQ => ProfileProblem::semilinear(spec.dim_n, spec.q, 0.0, r_max, tol),
        Nonlinearity::ExpMinusOne => {
            let alpha = (n + 2.0) * (FLOOR_POWER - 1.0) / 2.0 - 1.0;
            ProfileProblem::semilinear(spec.dim_n, FLOOR_POWER, alpha, r_max, tol)
        }
    })
}

fn check_regime(spec: &ModelSpec) -> Result<()> {
    if spec.m != 1.0 {
        return Err(Error::WrongRegime(format!("subsolution floor needs m = 1, got {}", spec.m)));
    }
    match (spec.nonlinearity, spec.absorption) {
        (Nonlinearity::PowerQ, AbsorptionLaw::ExpInv { .. }) => {
            let qc = 1.0 + 2.0 / spec.dim_n as f64;
            if spec.q >= qc {
                return Err(Error::WrongRegime(format!("power floor needs q < 1 + 2/N = {qc}, got {}", spec.q)));
            }
            Ok(())
        }
        (Nonlinearity::ExpMinusOne, AbsorptionLaw::DoubleExpInv { .. }) => Ok(()),
        _ => Err(Error::WrongScenario(
            "subsolution floor needs u^q with ExpInv or e^u - 1 with DoubleExpInv".into(),
        )),
    }
}

/// Natural log of [`subsolution_floor`].
pub fn ln_subsolution_floor(spec: &ModelSpec, epsilon: f64, x_radius: f64, t: f64, constant: f64) -> Result<f64> {
    check_regime(spec)?;
    if !(t > 0.0 && t <= epsilon) {
        return Err(domain(format!("need 0 < t <= epsilon, got t={t}, epsilon={epsilon}")));
    }
    if !(constant > 0.0) || !(x_radius >= 0.0) {
        return Err(domain(format!("need constant > 0 and |x| >= 0, got {constant}, {x_radius}")));
    }
    let x2 = x_radius * x_radius;
    match spec.absorption {
        AbsorptionLaw::ExpInv { kappa } => {
            let q = spec.q;
            let edge = 4.0 * kappa / (q - 1.0);
            if x2 > edge * (1.0 + 1e-12) {
                return Err(domain(format!("|x|^2 = {x2} outside the window |x|^2 <= {edge}")));
            }
            let expo = (kappa / (q - 1.0) - 0.25 * x2).max(0.0);
            Ok(constant.ln() - t.ln() / (q - 1.0) + expo / t)
        }
        AbsorptionLaw::DoubleExpInv { sigma } => {
            if x2 >= sigma / 4.0 {
                return Err(domain(format!("|x|^2 = {x2} outside the window |x|^2 < {}", sigma / 4.0)));
            }
            let nd = spec.dim_n as f64;
            let n = FLOOR_POWER;
            let ln_cn_root = sigma / epsilon + (n * (nd + 2.0) - nd) * epsilon.ln() / (2.0 * (n - 1.0));
            Ok(constant.ln() + ln_cn_root - (2.0 + nd / 2.0) * t.ln() + (x2 + t).ln() - x2 / (4.0 * t))
        }
        _ => unreachable!("checked by check_regime"),
    }
}

/// Lower bound for `u_∞(x, t)`, valid for `0 < t ≤ ε` inside the radius window.
///
/// `u^q`, `h = e^{−κ/t}`: `C t^{−1/(q−1)} e^{(κ/(q−1) − |x|²/4)/t}` for `|x|² ≤ 4κ/(q−1)`.
/// `e^u − 1`, `h = e^{−e^{σ/t}}`: `δ c_n^{−1/(n−1)} t^{−2−N/2}(|x|² + t) e^{−|x|²/4t}` with
/// `c_n^{−1/(n−1)} = e^{σ/ε} ε^{(n(N+2)−N)/(2(n−1))}`, for `|x|² < σ/4`.
pub fn subsolution_floor(spec: &ModelSpec, epsilon: f64, x_radius: f64, t: f64, constant: f64) -> Result<f64> {
    Ok(ln_subsolution_floor(spec, epsilon, x_radius, t, constant)?.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power() -> ModelSpec {
        ModelSpec::power(1, 1.0, 2.0, AbsorptionLaw::ExpInv { kappa: 1.0 }, 1.0).unwrap()
    }

    #[test]
    fn window_edge_is_algebraic() {
        let spec = power();
        let v = subsolution_floor(&spec, 1.0, 2.0, 0.1, 3.0).unwrap();
        assert!((v - 3.0 / 0.1).abs() < 1e-10);
        assert!(subsolution_floor(&spec, 1.0, 2.01, 0.1, 3.0).is_err());
    }

    #[test]
    fn plug_in_value() {
        let v = ln_subsolution_floor(&power(), 0.05, 0.2, 0.05, 1.5).unwrap();
        let expected = 1.5f64.ln() + 20f64.ln() + 0.99 * 20.0;
        assert!((v - expected).abs() < 1e-12);
    }

    #[test]
    fn grows_without_bound_as_t_shrinks() {
        let spec = power();
        let a = ln_subsolution_floor(&spec, 1.0, 0.5, 1e-2, 1.0).unwrap();
        let b = ln_subsolution_floor(&spec, 1.0, 0.5, 1e-3, 1.0).unwrap();
        assert!(b > a + 100.0);
        assert_eq!(subsolution_floor(&spec, 1.0, 0.5, 1e-4, 1.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn exponential_floor_regime() {
        let spec = ModelSpec::new(1, 1.0, 2.0, Nonlinearity::ExpMinusOne, AbsorptionLaw::DoubleExpInv { sigma: 1.0 }, 1.0)
            .unwrap();
        assert!(ln_subsolution_floor(&spec, 0.1, 0.4, 0.1, 1.0).is_ok());
        assert!(ln_subsolution_floor(&spec, 0.1, 0.5, 0.1, 1.0).is_err());
        let p = floor_profile_problem(&spec, 12.0, 1e-8).unwrap();
        assert!((p.decay_exponent() - 2.0).abs() < 1e-12);
        assert!(p.validate().is_ok());
        let heat = ModelSpec::power(1, 2.0, 3.0, AbsorptionLaw::ExpInv { kappa: 1.0 }, 1.0).unwrap();
        assert!(matches!(ln_subsolution_floor(&heat, 1.0, 0.1, 0.1, 1.0), Err(Error::WrongRegime(_))));
    }
}
