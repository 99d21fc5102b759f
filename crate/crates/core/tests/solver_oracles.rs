use blowup_core::analytic::{barenblatt_slow, heat_kernel};
use blowup_core::model::{AbsorptionLaw, ModelSpec};
use blowup_core::solver::{dirac_approx, FieldState, RadialGrid, Solver, SolverConfig, TimeSchedule};

fn l1(grid: &RadialGrid, a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).zip(&grid.volumes).map(|((x, y), v)| (x - y).abs() * v).sum()
}

#[test]
fn dirac_data_from_heat_kernel() {
    let spec = ModelSpec::power(1, 1.0, 2.0, AbsorptionLaw::Constant { c: 0.0 }, 1.0).unwrap();
    let grid = RadialGrid::uniform(1, 6.0, 800).unwrap();
    let solver = Solver::new(spec, grid.clone(), SolverConfig::default()).unwrap();
    let sched = TimeSchedule::geometric(0.0, 0.2, 1.05, 200, vec![0.1, 0.2]);
    let t0 = std::time::Instant::now();
    let series = solver.run(1.0, 0.02, &sched).unwrap();
    eprintln!("heat run {:?}, {} steps", t0.elapsed(), series.stats.steps);
    for t in [0.1, 0.2] {
        let s = series.snapshot_at(t).unwrap();
        let exact: Vec<f64> = grid.centers.iter().map(|&r| heat_kernel(1, r, t).unwrap()).collect();
        let err = l1(&grid, &s.values, &exact);
        eprintln!("t={t} L1 err {err:e}");
        assert!(err < 1e-2);
    }
}

#[test]
fn dirac_mass_and_support() {
    let grid = RadialGrid::refined_for_support(2, 3.0, 400, 0.01, 8).unwrap();
    for k in [1.0, 10.0, 100.0] {
        let s = dirac_approx(&grid, k, 0.01).unwrap();
        assert!((s.mass - k).abs() < 1e-12 * k);
        for (c, u) in grid.centers.iter().zip(&s.values) {
            if grid.edges[grid.centers.iter().position(|x| x == c).unwrap()] >= 0.01 {
                assert_eq!(*u, 0.0);
            }
        }
    }
    let coarse = RadialGrid::uniform(1, 6.0, 100).unwrap();
    assert!(dirac_approx(&coarse, 1.0, 0.02).is_err());
}

#[test]
fn barenblatt_advance() {
    let spec = ModelSpec::power(1, 2.0, 3.0, AbsorptionLaw::Constant { c: 0.0 }, 2.0).unwrap();
    let grid = RadialGrid::uniform(1, 4.0, 800).unwrap();
    let init: Vec<f64> = grid.centers.iter().map(|&r| barenblatt_slow(&spec, 1.0, r, 1.0).unwrap()).collect();
    let init = FieldState::new(1.0, init, &grid).unwrap();
    let solver = Solver::new(spec, grid.clone(), SolverConfig::default()).unwrap();
    let sched = TimeSchedule::geometric(1.0, 1.5, 1.02, 50, vec![1.5]);
    let series = solver.run_from(init, 1.0, 0.0, &sched, None).unwrap();
    let s = series.snapshot_at(1.5).unwrap();
    let exact: Vec<f64> = grid.centers.iter().map(|&r| barenblatt_slow(&spec, 1.0, r, 1.5).unwrap()).collect();
    let err = l1(&grid, &s.values, &exact) / grid.integrate(&exact);
    eprintln!("barenblatt rel L1 {err:e}, steps {}", series.stats.steps);
    assert!(err < 0.02);
}
