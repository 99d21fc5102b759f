use blowup_core::energetics::{energy_report, energy_space_tail, energy_time_tail, space_time_integral, Functional};
use blowup_core::model::{AbsorptionLaw, ModelSpec};
use blowup_core::solver::{RadialGrid, SnapshotSeries, Solver, SolverConfig, TimeSchedule};

fn run() -> SnapshotSeries {
    let spec = ModelSpec::power(1, 1.0, 2.0, AbsorptionLaw::ExpInv { kappa: 1.0 }, 0.2).unwrap();
    let grid = RadialGrid::refined_for_support(1, 4.0, 400, 0.02, 4).unwrap();
    let solver = Solver::new(spec, grid, SolverConfig::default()).unwrap();
    let snaps = TimeSchedule::log_spaced(1e-3, 0.2, 128);
    let sched = TimeSchedule::geometric(0.0, 0.2, 1.02, 400, snaps);
    solver.run(16.0, 0.02, &sched).unwrap()
}

fn every_other(series: &SnapshotSeries) -> SnapshotSeries {
    let n = series.snapshots.len();
    let mut out = series.clone();
    out.snapshots = series
        .snapshots
        .iter()
        .enumerate()
        .filter(|(i, _)| *i <= 1 || i % 2 == 1 || *i == n - 1)
        .map(|(_, s)| s.clone())
        .collect();
    out
}

#[test]
fn functionals_are_monotone_and_nonnegative() {
    let s = run();
    let rs = [0.002, 0.01, 0.05, 0.1, 0.15];
    let taus = [0.0, 0.1, 0.3, 1.0];
    let rep = energy_report(&s, &rs, &taus, &[0.25]).unwrap();
    for v in [&rep.i1, &rep.i2, &rep.i3] {
        assert!(v.iter().all(|x| *x >= 0.0));
        assert!(v.windows(2).all(|w| w[1] <= w[0]), "{v:?}");
    }
    for grid in [&rep.e1, &rep.e2] {
        for row in grid.iter() {
            assert!(row.iter().all(|x| *x >= 0.0));
            assert!(row.windows(2).all(|w| w[1] <= w[0]), "not monotone in tau: {row:?}");
        }
        for j in 0..taus.len() {
            assert!(grid.windows(2).all(|w| w[1][j] >= w[0][j]), "not monotone in r");
        }
    }
    let (i1_full, _, _) = energy_time_tail(&s, 0.0).unwrap();
    for (r, row) in rs.iter().zip(&rep.e1) {
        let (e1_full, _, _) = energy_space_tail(&s, *r, 0.0).unwrap();
        assert_eq!(row[0], e1_full);
        assert!(row.iter().all(|e| *e <= e1_full));
        assert!(e1_full <= i1_full * (1.0 + 1e-12));
    }
}

#[test]
fn windows_add_up() {
    let s = run();
    for which in [Functional::GradSq, Functional::Square, Functional::Absorption] {
        for (r1, r2) in [(0.003, 0.0731), (0.01, 0.1), (0.0123, 0.0124)] {
            let whole = space_time_integral(&s, r1, 0.2, 0.0, which).unwrap();
            let parts = space_time_integral(&s, r2, 0.2, 0.0, which).unwrap() + space_time_integral(&s, r1, r2, 0.0, which).unwrap();
            assert!((whole - parts).abs() <= 1e-10 * whole, "{which:?} [{r1}, {r2}]: {whole} vs {parts}");
        }
    }
}

#[test]
fn snapshot_refinement_changes_little() {
    let fine = run();
    let coarse = every_other(&fine);
    for r in [0.005, 0.02, 0.1] {
        let (a1, a2, a3) = energy_time_tail(&fine, r).unwrap();
        let (b1, b2, b3) = energy_time_tail(&coarse, r).unwrap();
        for (a, b) in [(a1, b1), (a2, b2), (a3, b3)] {
            assert!((a - b).abs() < 1e-2 * a, "r={r}: {a} vs {b}");
        }
    }
}
