use blowup_core::profiles::{fit_asymptotics, pme_residual, shoot_pme_vss, shoot_semilinear_vss, ProfileProblem, ShootingConfig};

fn tilde(n: f64, dim: usize, r_max: f64) -> (Vec<f64>, Vec<f64>) {
    let alpha = (2.0 + dim as f64) * (n - 1.0) / 2.0 - 1.0;
    let prob = ProfileProblem::semilinear(dim, n, alpha, r_max, 1e-10);
    let sol = shoot_semilinear_vss(&prob, &ShootingConfig::default()).unwrap();
    let scale = (2.0 / (dim as f64 + 2.0)).powf(1.0 / (n - 1.0));
    (sol.xi, sol.f.iter().map(|f| scale * f).collect())
}

#[test]
fn rescaled_profiles_are_ordered() {
    let (x3, f3) = tilde(3.0, 1, 12.0);
    let (x4, f4) = tilde(4.0, 1, 12.0);
    assert_eq!(x3, x4);
    let mut worst = f64::NEG_INFINITY;
    for ((x, a), b) in x3.iter().zip(&f3).zip(&f4) {
        if *x <= 8.0 {
            worst = worst.max(a - b);
        }
    }
    eprintln!("max f3~ - f4~ on [0,8]: {worst:e}; f3~(0)={} f4~(0)={}", f3[0], f4[0]);
    assert!(worst <= 1e-6);
}

#[test]
fn shooting_value_is_tolerance_consistent() {
    let cfg = ShootingConfig::default();
    let a = shoot_semilinear_vss(&ProfileProblem::semilinear(1, 2.0, 0.0, 12.0, 1e-8), &cfg).unwrap().shoot_value;
    let b = shoot_semilinear_vss(&ProfileProblem::semilinear(1, 2.0, 0.0, 12.0, 1e-10), &cfg).unwrap().shoot_value;
    eprintln!("a*(1e-8) = {a:.15}, a*(1e-10) = {b:.15}");
    assert!((a - b).abs() <= 1e-7 * b);
}

#[test]
fn shooting_is_deterministic() {
    let prob = ProfileProblem::semilinear(2, 1.8, 0.3, 12.0, 1e-9);
    let cfg = ShootingConfig::default();
    let a = shoot_semilinear_vss(&prob, &cfg).unwrap();
    let b = shoot_semilinear_vss(&prob, &cfg).unwrap();
    assert_eq!(a.shoot_value.to_bits(), b.shoot_value.to_bits());
    assert_eq!(a.f, b.f);
}

#[test]
fn decay_rate_in_higher_dimension() {
    let prob = ProfileProblem::semilinear(2, 1.8, 0.3, 14.0, 1e-10);
    let sol = shoot_semilinear_vss(&prob, &ShootingConfig::default()).unwrap();
    let fit = fit_asymptotics(&sol, &prob).unwrap();
    let expected = prob.decay_exponent();
    assert!((fit.exponent - expected).abs() < 0.1 * expected.abs(), "{} vs {expected}", fit.exponent);
}

#[test]
fn pme_profile_residual_is_small() {
    let prob = ProfileProblem::pme(1, 2.0, 2.5, 10.0, 1e-10);
    let sol = shoot_pme_vss(&prob, &ShootingConfig::default()).unwrap();
    let xi0 = sol.support_radius.unwrap();
    let f0 = sol.f[0];
    let res = pme_residual(&prob, &sol.xi, &sol.f, xi0);
    let worst = res.iter().map(|r| r.abs()).fold(0.0, f64::max);
    eprintln!("pme F(0)={f0} xi0={xi0} worst residual {worst:e}");
    assert!(worst <= 1e-4 * f0.max(f0.powf(prob.q)));
}
