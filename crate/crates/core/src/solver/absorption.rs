use super::grid::RadialGrid;
use super::state::FieldState;
use crate::error::Result;
use crate::model::{AbsorptionLaw, ModelSpec, Nonlinearity};
use crate::quadrature::{log_sum_exp, GL5_NODES, GL5_WEIGHTS};

// Largest change of ln h allowed inside one Gauss–Legendre panel.
const PANEL_DLOG_H: f64 = 0.25;
const MAX_PANELS: f64 = 64.0;

/// `ln ∫_{ta}^{tb} h(s) ds` for a nondecreasing `h`, never forming `h` itself.
pub fn log_h_integral(law: &AbsorptionLaw, ta: f64, tb: f64) -> Result<f64> {
    if !(tb > ta) {
        return Ok(f64::NEG_INFINITY);
    }
    if ta <= 0.0 {
        return Ok(law.h_primitive(tb)?.log_value);
    }
    let lha = law.log_h(ta)?;
    let lhb = law.log_h(tb)?;
    if lhb == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let spread = (lhb - lha).abs();
    if spread / PANEL_DLOG_H > MAX_PANELS {
        // h(ta) is negligible against h(tb), so the primitive difference does not cancel.
        let pa = law.h_primitive(ta)?.log_value;
        let pb = law.h_primitive(tb)?.log_value;
        if pa < pb {
            return Ok(pb + (-(pa - pb).exp_m1()).ln());
        }
    }
    let panels = (spread / PANEL_DLOG_H).ceil().clamp(1.0, MAX_PANELS) as usize;
    let width = (tb - ta) / panels as f64;
    let mut terms = Vec::with_capacity(5 * panels);
    for p in 0..panels {
        let c = ta + (p as f64 + 0.5) * width;
        for (x, w) in GL5_NODES.iter().zip(GL5_WEIGHTS) {
            terms.push((0.5 * w * width).ln() + law.log_h(c + 0.5 * width * x)?);
        }
    }
    Ok(log_sum_exp(&terms))
}

/// Exact solution of `u' = −h(t) g(u)` over `[t0, t0 + dt]` given `ln ∫ h`.
pub fn absorb_value(u: f64, log_int_h: f64, spec: &ModelSpec) -> f64 {
    if u <= 0.0 || log_int_h == f64::NEG_INFINITY {
        return u.max(0.0);
    }
    match spec.nonlinearity {
        Nonlinearity::PowerQ => {
            let q = spec.q;
            // u_new = (u^{1−q} + (q−1)A)^{−1/(q−1)} = u (1 + x)^{−1/(q−1)}
            let ln_x = (q - 1.0).ln() + log_int_h + (q - 1.0) * u.ln();
            let ln_1p_x = if ln_x > 30.0 { ln_x + (-ln_x).exp().ln_1p() } else { ln_x.exp().ln_1p() };
            (u.ln() - ln_1p_x / (q - 1.0)).exp()
        }
        Nonlinearity::ExpMinusOne => {
            let a = -(-u).exp_m1();
            let b = a * (-log_int_h.exp()).exp();
            -(-b).ln_1p()
        }
    }
}

/// Exact absorption over `[t_mid − dt/2, t_mid + dt/2]` applied cell by cell.
pub fn absorption_step(state: &FieldState, t_mid: f64, dt: f64, spec: &ModelSpec, grid: &RadialGrid) -> Result<FieldState> {
    let ta = (t_mid - 0.5 * dt).max(0.0);
    let lint = log_h_integral(&spec.absorption, ta, t_mid + 0.5 * dt)?;
    let values = state.values.iter().map(|&u| absorb_value(u, lint, spec)).collect();
    FieldState::new(state.t, values, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AbsorptionLaw, Nonlinearity};

    fn spec(nl: Nonlinearity, q: f64, law: AbsorptionLaw) -> ModelSpec {
        ModelSpec::new(1, 1.0, q, nl, law, 1.0).unwrap()
    }

    #[test]
    fn power_step_matches_ode() {
        let s = spec(Nonlinearity::PowerQ, 2.0, AbsorptionLaw::Constant { c: 1.0 });
        let lint = log_h_integral(&s.absorption, 0.5, 1.5).unwrap();
        assert!(lint.abs() < 1e-14);
        assert!((absorb_value(1.0, lint, &s) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn exp_step_matches_closed_form() {
        let s = spec(Nonlinearity::ExpMinusOne, 2.0, AbsorptionLaw::Constant { c: 1.0 });
        let ln2 = 2f64.ln();
        let v = absorb_value(ln2, ln2.ln(), &s);
        assert!((v - (4.0f64 / 3.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn zero_absorption_is_identity() {
        let s = spec(Nonlinearity::PowerQ, 2.0, AbsorptionLaw::Constant { c: 0.0 });
        let lint = log_h_integral(&s.absorption, 0.1, 0.2).unwrap();
        assert_eq!(lint, f64::NEG_INFINITY);
        assert_eq!(absorb_value(3.7, lint, &s), 3.7);
        assert_eq!(absorb_value(0.0, 0.0, &s), 0.0);
    }

    #[test]
    fn huge_values_saturate_at_the_ode_bound() {
        // u → ∞ gives ((q−1)A)^{−1/(q−1)}.
        let s = spec(Nonlinearity::PowerQ, 3.0, AbsorptionLaw::Constant { c: 1.0 });
        let v = absorb_value(1e300, 0.0, &s);
        assert!((v - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn integral_of_power_law_is_exact() {
        let law = AbsorptionLaw::Power { alpha: 1.0 };
        let v = log_h_integral(&law, 0.25, 0.5).unwrap().exp();
        assert!((v - (0.125 - 0.03125)).abs() < 1e-15);
    }

    #[test]
    fn integral_of_exp_inv_matches_primitive_difference() {
        let law = AbsorptionLaw::ExpInv { kappa: 1.0 };
        for (a, b) in [(0.05, 0.06), (0.2, 0.21), (0.01, 0.5)] {
            let direct = log_h_integral(&law, a, b).unwrap().exp();
            let pa = law.h_primitive(a).unwrap().value;
            let pb = law.h_primitive(b).unwrap().value;
            assert!((direct - (pb - pa)).abs() < 1e-9 * (pb - pa), "{a} {b}");
        }
    }
}
