use blowup_core::energetics::uniform_tail_bound;
use blowup_core::experiments::{classify_blowup, load_sweep, sweep_k, Scenario, MANIFEST_FILE};

fn heat_scenario(k_list: &[f64], max_steps: Option<usize>) -> Scenario {
    let solver = match max_steps {
        Some(n) => format!(r#", "solver": {{ "max_steps": {n} }}"#),
        None => String::new(),
    };
    let text = format!(
        r#"{{
            "name": "heat",
            "spec": {{ "dim_n": 1, "m": 1.0, "q": 2.0, "nonlinearity": "power_q",
                       "absorption": {{ "family": "constant", "c": 0.0 }}, "horizon_t": 0.2 }},
            "grid": {{ "radius": 6.0, "n_cells": 400 }},
            "k_list": {k_list:?},
            "schedule": {{ "t_start": 0.0, "t_end": 0.2,
                           "mode": {{ "kind": "geometric", "ratio": 1.05, "n_steps": 120 }},
                           "snapshot_times": [0.01, 0.05, 0.1, 0.2] }},
            "probes": [0.2, 0.4],
            "t_probe_list": [0.1, 0.05]{solver}
        }}"#
    );
    Scenario::from_json(&text).unwrap()
}

#[test]
fn heat_sweep_conserves_mass_and_is_ordered() {
    let out = sweep_k(&heat_scenario(&[1.0, 2.0, 4.0], None), None, 2).unwrap();
    let runs = out.completed();
    assert_eq!(runs.len(), 3);
    for s in &runs {
        assert!(s.truncation_ok());
        for snap in &s.snapshots {
            assert!((snap.mass - s.k).abs() <= 1e-6 * s.k, "k={} t={}: mass {}", s.k, snap.t, snap.mass);
        }
    }
    for pair in runs.windows(2) {
        for (a, b) in pair[0].snapshots.iter().zip(&pair[1].snapshots).skip(1) {
            assert!(a.values.iter().zip(&b.values).all(|(x, y)| *x <= y + 1e-8));
        }
    }
    let tails = uniform_tail_bound(&runs, 0.25).unwrap();
    assert!(tails.windows(2).all(|w| w[1].1 >= w[0].1));
}

#[test]
fn manifest_lists_every_k() {
    let dir = tempfile::tempdir().unwrap();
    let out = sweep_k(&heat_scenario(&[1.0, 2.0, 4.0], Some(5)), Some(dir.path()), 0).unwrap();
    assert_eq!(out.manifest.runs.len(), 3);
    for (run, k) in out.manifest.runs.iter().zip([1.0, 2.0, 4.0]) {
        assert_eq!(run.k, k);
        assert!(run.failure.as_deref().unwrap().contains("step limit"));
        assert!(run.json.is_some() && run.csv.is_some());
    }
    assert!(out.completed().is_empty());
    let (manifest, loaded) = load_sweep(&dir.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(manifest.runs.len(), 3);
    assert!(loaded.is_empty());
}

#[test]
fn verdict_is_reproduced_from_stored_files() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = heat_scenario(&[1.0, 4.0, 16.0], None);
    let out = sweep_k(&scenario, Some(dir.path()), 0).unwrap();
    let direct = classify_blowup(&out.completed(), &scenario).unwrap().to_json().unwrap();
    let (manifest, loaded) = load_sweep(&dir.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(manifest.scenario, scenario);
    for (a, b) in out.completed().iter().zip(&loaded) {
        assert_eq!(a.snapshots, b.snapshots);
        assert_eq!(a.k, b.k);
    }
    let first = classify_blowup(&loaded, &manifest.scenario).unwrap().to_json().unwrap();
    let second = classify_blowup(&loaded, &manifest.scenario).unwrap().to_json().unwrap();
    assert_eq!(first, direct);
    assert_eq!(first, second);
}

#[test]
fn classification_needs_three_runs() {
    let scenario = heat_scenario(&[1.0, 2.0, 4.0], None);
    let runs = sweep_k(&scenario, None, 1).unwrap().completed();
    assert!(classify_blowup(&runs[..2], &scenario).is_err());
}
