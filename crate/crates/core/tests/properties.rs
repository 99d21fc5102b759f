use blowup_core::analytic::{barenblatt_fast, pme_limit, razor_blade, universal_bound};
use blowup_core::model::{dini_sqrt, AbsorptionLaw, ModelSpec, OmegaSpec};
use proptest::prelude::*;

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

fn omega_strategy() -> impl Strategy<Value = OmegaSpec> {
    prop_oneof![
        (0.1f64..3.0).prop_map(|kappa0| OmegaSpec::Const { kappa0 }),
        (0.0f64..0.95).prop_map(|alpha0| OmegaSpec::Power { alpha0 }),
        (0.1f64..4.0).prop_map(|beta| OmegaSpec::LogPower { beta }),
    ]
}

fn law_strategy() -> impl Strategy<Value = AbsorptionLaw> {
    prop_oneof![
        (0.1f64..3.0).prop_map(|c| AbsorptionLaw::Constant { c }),
        (0.0f64..4.0).prop_map(|alpha| AbsorptionLaw::Power { alpha }),
        (0.1f64..3.0).prop_map(|kappa| AbsorptionLaw::ExpInv { kappa }),
        omega_strategy().prop_map(|omega| AbsorptionLaw::ExpOmega { omega }),
        (0.1f64..2.0).prop_map(|sigma| AbsorptionLaw::DoubleExpInv { sigma }),
        omega_strategy().prop_map(|omega| AbsorptionLaw::DoubleExpOmega { omega }),
        ((0.0f64..3.0), omega_strategy()).prop_map(|(gamma, omega)| AbsorptionLaw::PowerOverOmega { gamma, omega }),
    ]
    .prop_filter("h must be nondecreasing", |law| ModelSpec::power(1, 1.0, 2.0, *law, 1.0).is_ok())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn log_h_is_nondecreasing(law in law_strategy()) {
        let ts = log_grid(1e-6, 1.0, 1000);
        let lh: Vec<f64> = ts.iter().map(|&t| law.log_h(t).unwrap()).collect();
        for w in lh.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12 * w[0].abs(), "{law:?}: {} then {}", w[0], w[1]);
        }
    }

    #[test]
    fn primitive_is_increasing_and_below_t_h(law in law_strategy()) {
        let ts = log_grid(1e-3, 1.0, 60);
        let mut prev = f64::NEG_INFINITY;
        for &t in &ts {
            let lh = law.log_h(t).unwrap();
            if lh == f64::NEG_INFINITY {
                // h is zero to double precision, and so is H.
                prop_assert_eq!(law.h_primitive(t).unwrap().log_value, f64::NEG_INFINITY);
                continue;
            }
            let p = law.h_primitive(t).unwrap();
            let bound = t.ln() + lh;
            prop_assert!(p.log_value <= bound + 1e-9 * bound.abs().max(1.0), "{law:?} at t={t}");
            if prev.is_finite() {
                prop_assert!(p.log_value > prev, "{law:?} at t={t}");
            }
            prev = p.log_value;
        }
    }

    #[test]
    fn universal_bound_is_nonincreasing(law in law_strategy(), q in 1.2f64..4.0) {
        let spec = ModelSpec::power(1, 1.0, q, law, 1.0).unwrap();
        let ts = log_grid(1e-3, 1.0, 80);
        let ub: Vec<f64> = ts.iter().map(|&t| universal_bound(&spec, t).unwrap()).collect();
        for w in ub.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12), "{law:?}: {} then {}", w[0], w[1]);
        }
    }

    #[test]
    fn primitive_of_exp_omega_matches_asymptotics(alpha0 in 0.0f64..0.9, t in 1e-4f64..1e-2) {
        // Past the asymptotic regime the relative correction (2 − α₀)/((1 − α₀) ω/t) is not small.
        prop_assume!((2.0 - alpha0) / ((1.0 - alpha0) * t.powf(alpha0 - 1.0)) < 0.25);
        let omega = OmegaSpec::Power { alpha0 };
        let law = AbsorptionLaw::ExpOmega { omega };
        let lhs = law.h_primitive(t).unwrap().log_value;
        let rhs = (0.5 / (1.0 - alpha0)).ln() + 2.0 * t.ln() - omega.ln_value(t).unwrap() + law.log_h(t).unwrap();
        prop_assert!(lhs >= rhs, "alpha0={alpha0}, t={t}: ln H = {lhs}, bound {rhs}");
    }

    #[test]
    fn dini_sqrt_separates_power_from_const(alpha0 in 0.001f64..0.999, kappa0 in 0.1f64..5.0) {
        let power = OmegaSpec::Power { alpha0 };
        let constant = OmegaSpec::Const { kappa0 };
        prop_assert!(dini_sqrt(&power).satisfied, "alpha0={}", alpha0);
        prop_assert!(!dini_sqrt(&constant).satisfied, "kappa0={}", kappa0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn pme_limit_is_the_universal_bound(m in 1.05f64..3.0, extra in 0.01f64..1.0, t in 1e-3f64..1.0) {
        // q + 1 > 2m > 2
        let q = 2.0 * m - 1.0 + extra;
        let gamma = (q - m) / (m - 1.0);
        let spec = ModelSpec::power(1, m, q, AbsorptionLaw::Power { alpha: gamma }, 1.0).unwrap();
        let a = pme_limit(&spec, t).unwrap();
        let b = universal_bound(&spec, t).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * b, "m={m}, q={q}, t={t}: {a} vs {b}");
    }

    #[test]
    fn fast_barenblatt_rises_to_the_razor_blade(dim_n in 1usize..4, frac in 0.2f64..0.9, r in 0.01f64..5.0, t in 1e-3f64..1.0) {
        // Fast diffusion with finite mass: (N - 2)_+ / N < m < 1.
        let lo = (dim_n as f64 - 2.0).max(0.0) / dim_n as f64;
        let m = lo + frac * (1.0 - lo);
        let spec = ModelSpec::power(dim_n, m, 2.0, AbsorptionLaw::Power { alpha: 0.0 }, 1.0).unwrap();
        let w = razor_blade(&spec, r, t).unwrap();
        let mut prev = 0.0;
        for k in [1.0, 10.0, 100.0, 1000.0] {
            let b = barenblatt_fast(&spec, k, r, t).unwrap();
            prop_assert!(b <= w * (1.0 + 1e-12), "k={k}: B={b} > W={w}");
            prop_assert!(b >= prev);
            prev = b;
        }
    }
}
