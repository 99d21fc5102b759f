#![allow(clippy::neg_cmp_op_on_partial_ord)]
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use blowup_core::analytic::{ReferenceKind, ReferenceSolution};
use blowup_core::energetics::energy_report;
use blowup_core::experiments::{classify_blowup, load_sweep, sweep_k, GridSpec, RhoRule, Scenario, Verdict, MANIFEST_FILE};
use blowup_core::model::{dini_sqrt, dini_theta, existence_check, ConditionVerdict, ModelSpec};
use blowup_core::profiles::{fit_asymptotics, shoot_pme_vss, shoot_semilinear_vss, ProfileKind, ProfileProblem, ShootingConfig};
use blowup_core::solver::io::{fmt_f64, read_run, write_run, RunConfig};
use blowup_core::solver::{RadialGrid, Solver, SolverConfig, TimeSchedule};
use blowup_core::{Error, Result};

#[derive(Parser)]
#[command(name = "blowup", version, about = "Fundamental solutions with time-degenerate absorption")]
struct Cli {
    /// JSON configuration for the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads for sweeps (0: one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Reserved; nothing is stochastic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Existence and modulus-condition verdicts for a model or scenario.
    Check,
    /// Tabulate a closed-form reference solution.
    Reference,
    /// Shoot a self-similar profile.
    Profile,
    /// Run the solver once.
    Simulate,
    /// Run a k-sweep and write its manifest.
    Sweep,
    /// Energy functionals of a stored run.
    Energy {
        /// Run sidecar JSON; overrides `run` in the config.
        #[arg(long)]
        run: Option<PathBuf>,
    },
    /// Classify a stored sweep.
    Classify {
        /// Sweep manifest; defaults to the manifest in --out-dir.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Write the plotting bundle for a stored sweep.
    Report {
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReferenceConfig {
    kind: ReferenceKind,
    spec: ModelSpec,
    #[serde(default)]
    k: Option<f64>,
    times: Vec<f64>,
    r_max: f64,
    n_points: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileConfig {
    problem: ProfileProblem,
    #[serde(default)]
    shooting: ShootingConfig,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateConfig {
    spec: ModelSpec,
    grid: GridSpec,
    k: f64,
    #[serde(default)]
    rho: RhoRule,
    schedule: TimeSchedule,
    #[serde(default)]
    solver: SolverConfig,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EnergyConfig {
    #[serde(default)]
    run: Option<PathBuf>,
    r_values: Vec<f64>,
    tau_values: Vec<f64>,
    #[serde(default)]
    deltas: Vec<f64>,
}

#[derive(Serialize)]
struct CheckOutput {
    spec: ModelSpec,
    existence: ConditionVerdict,
    dini_sqrt: Option<ConditionVerdict>,
    dini_theta: Option<ConditionVerdict>,
}

enum Outcome {
    Done,
    Undecided,
}

fn read_config<T: for<'de> Deserialize<'de>>(path: &Option<PathBuf>) -> Result<T> {
    let path = path.as_ref().ok_or_else(|| Error::Config("--config <path> is required".into()))?;
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    info!("wrote {}", path.display());
    Ok(())
}

fn check(cli: &Cli) -> Result<Outcome> {
    let value: serde_json::Value = read_config(&cli.config)?;
    let spec: ModelSpec = match value.get("spec") {
        Some(s) => serde_json::from_value(s.clone()),
        None => serde_json::from_value(value),
    }
    .map_err(|e| Error::Config(e.to_string()))?;
    spec.validate()?;
    let omega = spec.absorption.omega();
    let out = CheckOutput {
        spec,
        existence: existence_check(&spec),
        dini_sqrt: omega.as_ref().map(dini_sqrt),
        dini_theta: match omega {
            Some(o) if spec.m > 1.0 => Some(dini_theta(&o, spec.m, spec.q, spec.dim_n)?),
            _ => None,
        },
    };
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(Outcome::Done)
}

fn reference(cli: &Cli) -> Result<Outcome> {
    let cfg: ReferenceConfig = read_config(&cli.config)?;
    cfg.spec.validate()?;
    if cfg.n_points < 2 || !(cfg.r_max > 0.0) {
        return Err(Error::Config("reference needs n_points >= 2 and r_max > 0".into()));
    }
    let sol = ReferenceSolution::new(cfg.kind, &cfg.spec, cfg.k)?;
    fs::create_dir_all(&cli.out_dir)?;
    let path = cli.out_dir.join("reference.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["t", "r", "value", "kind"])?;
    let kind = serde_json::to_value(cfg.kind)?.as_str().unwrap_or_default().to_string();
    for &t in &cfg.times {
        for j in 0..cfg.n_points {
            let r = cfg.r_max * j as f64 / (cfg.n_points - 1) as f64;
            let v = match sol.value(r, t) {
                Ok(v) => v,
                Err(Error::SingularPoint(_)) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            w.write_record([fmt_f64(t), fmt_f64(r), fmt_f64(v), kind.clone()])?;
        }
    }
    w.flush()?;
    info!("wrote {}", path.display());
    Ok(Outcome::Done)
}

fn profile(cli: &Cli) -> Result<Outcome> {
    let cfg: ProfileConfig = read_config(&cli.config)?;
    let prob = cfg.problem;
    let mut sol = match prob.kind {
        ProfileKind::SemilinearVss => shoot_semilinear_vss(&prob, &cfg.shooting)?,
        ProfileKind::PmeVss => shoot_pme_vss(&prob, &cfg.shooting)?,
    };
    if prob.kind == ProfileKind::SemilinearVss {
        match fit_asymptotics(&sol, &prob) {
            Ok(fit) => {
                sol.fitted_exponent = Some(fit.exponent);
                sol.fitted_constant = Some(fit.constant);
                sol.lower_bound_constant = Some(fit.lower_bound_constant);
            }
            Err(e) => warn!("asymptotic fit skipped: {e}"),
        }
    }
    fs::create_dir_all(&cli.out_dir)?;
    let path = cli.out_dir.join("profile.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["xi", "f"])?;
    for (x, f) in sol.xi.iter().zip(&sol.f) {
        w.write_record([fmt_f64(*x), fmt_f64(*f)])?;
    }
    w.flush()?;
    let sidecar = serde_json::json!({
        "problem": prob,
        "shoot_value": sol.shoot_value,
        "classification": sol.classification,
        "support_radius": sol.support_radius,
        "fitted_exponent": sol.fitted_exponent,
        "fitted_constant": sol.fitted_constant,
        "lower_bound_constant": sol.lower_bound_constant,
        "predicted_exponent": prob.decay_exponent(),
        "bracket": sol.bracket,
        "bisections": sol.bisections,
    });
    write_json(&cli.out_dir.join("profile.json"), &sidecar)?;
    println!("{}", serde_json::to_string_pretty(&sidecar)?);
    Ok(Outcome::Done)
}

fn simulate(cli: &Cli) -> Result<Outcome> {
    let cfg: SimulateConfig = read_config(&cli.config)?;
    cfg.spec.validate()?;
    cfg.schedule.validate()?;
    let rho = cfg.rho.rho(cfg.k);
    let g = cfg.grid;
    let grid = match g.stretch {
        Some(s) => RadialGrid::stretched(cfg.spec.dim_n, g.radius, g.n_cells, s)?,
        None => RadialGrid::refined_for_support(cfg.spec.dim_n, g.radius, g.n_cells, rho, g.min_support_cells)?,
    };
    let run_config = RunConfig {
        spec: cfg.spec,
        grid: grid.params(),
        k: cfg.k,
        rho,
        schedule: cfg.schedule.clone(),
        solver: cfg.solver.clone(),
    };
    let series = Solver::new(cfg.spec, grid, cfg.solver)?.run(cfg.k, rho, &cfg.schedule)?;
    let paths = write_run(&series, &run_config, &cli.out_dir)?;
    println!("{}", paths.json.display());
    if let Some(f) = &series.failure {
        return Err(Error::Numerical { message: f.clone(), partial: series.snapshots.last().map_or(0.0, |s| s.t) });
    }
    Ok(Outcome::Done)
}

fn sweep(cli: &Cli) -> Result<Outcome> {
    let scenario: Scenario = read_config(&cli.config)?;
    let outcome = sweep_k(&scenario, Some(&cli.out_dir), cli.threads)?;
    let failed = outcome.manifest.runs.iter().filter(|r| r.failure.is_some()).count();
    println!("{}", cli.out_dir.join(MANIFEST_FILE).display());
    if failed == outcome.manifest.runs.len() {
        return Err(Error::Numerical { message: "every run of the sweep failed".into(), partial: 0.0 });
    }
    if failed > 0 {
        warn!("{failed} run(s) failed; see the manifest");
    }
    Ok(Outcome::Done)
}

fn energy(cli: &Cli, run: &Option<PathBuf>) -> Result<Outcome> {
    let cfg: EnergyConfig = read_config(&cli.config)?;
    let run_path = run
        .clone()
        .or(cfg.run)
        .ok_or_else(|| Error::Config("energy needs --run or a `run` entry".into()))?;
    let (series, _) = read_run(&run_path)?;
    let rep = energy_report(&series, &cfg.r_values, &cfg.tau_values, &cfg.deltas)?;
    fs::create_dir_all(&cli.out_dir)?;
    let path = cli.out_dir.join("energy.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["r", "tau", "I1", "I2", "I3", "E1", "E2", "f_tail"])?;
    for (i, &r) in rep.r_values.iter().enumerate() {
        for (j, &tau) in rep.tau_values.iter().enumerate() {
            w.write_record(
                [r, tau, rep.i1[i], rep.i2[i], rep.i3[i], rep.e1[i][j], rep.e2[i][j], rep.f_tail[i][j]].map(fmt_f64),
            )?;
        }
    }
    w.flush()?;
    write_json(&cli.out_dir.join("energy.json"), &rep)?;
    Ok(Outcome::Done)
}

fn manifest_path(cli: &Cli, manifest: &Option<PathBuf>) -> PathBuf {
    manifest.clone().unwrap_or_else(|| cli.out_dir.join(MANIFEST_FILE))
}

fn classify(cli: &Cli, manifest: &Option<PathBuf>) -> Result<Outcome> {
    let (m, series) = load_sweep(&manifest_path(cli, manifest))?;
    let verdict = classify_blowup(&series, &m.scenario)?;
    let text = verdict.to_json()? + "\n";
    fs::create_dir_all(&cli.out_dir)?;
    fs::write(cli.out_dir.join("verdict.json"), &text)?;
    print!("{text}");
    Ok(match verdict.verdict {
        Verdict::Undecided => Outcome::Undecided,
        _ => Outcome::Done,
    })
}

fn report(cli: &Cli, manifest: &Option<PathBuf>) -> Result<Outcome> {
    let (m, series) = load_sweep(&manifest_path(cli, manifest))?;
    let verdict = classify_blowup(&series, &m.scenario)?;
    let dir = &cli.out_dir;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("verdict.json"), verdict.to_json()? + "\n")?;

    let mut w = csv::Writer::from_path(dir.join("rho_extrapolation.csv"))?;
    w.write_record(["probe", "t_probe", "k", "rho", "limit", "slope"])?;
    for ev in &verdict.evidence.ratio_to_bound {
        let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
        for (k, rho) in ev.k.iter().zip(&ev.rho) {
            w.write_record([fmt_f64(ev.probe), fmt_f64(ev.t_probe), fmt_f64(*k), fmt_f64(*rho), opt(ev.limit), opt(ev.slope)])?;
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("tail_bound.csv"))?;
    w.write_record(["delta", "k", "value"])?;
    for p in &verdict.evidence.tail.values {
        w.write_record([fmt_f64(verdict.evidence.tail.delta), fmt_f64(p.k), fmt_f64(p.value)])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("decay.csv"))?;
    w.write_record(["probe", "t", "u"])?;
    for d in &verdict.evidence.decay {
        for (t, u) in d.t.iter().zip(&d.u) {
            w.write_record([fmt_f64(d.probe), fmt_f64(*t), fmt_f64(*u)])?;
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("traces.csv"))?;
    w.write_record(["k", "t", "mass", "max_u"])?;
    for s in &series {
        for tp in &s.traces {
            w.write_record([fmt_f64(s.k), fmt_f64(tp.t), fmt_f64(tp.mass), fmt_f64(tp.max_u)])?;
        }
    }
    w.flush()?;

    let runs: Vec<_> = m.runs.iter().filter_map(|r| r.csv.clone().map(|c| serde_json::json!({"k": r.k, "csv": c}))).collect();
    let index = serde_json::json!({
        "scenario": m.scenario.name,
        "verdict": verdict.verdict,
        "files": ["verdict.json", "rho_extrapolation.csv", "tail_bound.csv", "decay.csv", "traces.csv"],
        "runs": runs,
    });
    write_json(&dir.join("report.json"), &index)?;
    Ok(Outcome::Done)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Numerical { .. } | Error::Bracket { .. } | Error::Resolution { .. } => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        warn!("thread pool: {e}");
    }
    let result = match &cli.command {
        Command::Check => check(&cli),
        Command::Reference => reference(&cli),
        Command::Profile => profile(&cli),
        Command::Simulate => simulate(&cli),
        Command::Sweep => sweep(&cli),
        Command::Energy { run } => energy(&cli, run),
        Command::Classify { manifest } => classify(&cli, manifest),
        Command::Report { manifest } => report(&cli, manifest),
    };
    match result {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Undecided) => ExitCode::from(4),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
