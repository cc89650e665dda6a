//! The `spde` command-line front end.

pub mod config;
pub mod output;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::Parser;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::{json, Value};

use crate::error::{Result, SpdeError};
use crate::experiments::{
    ergodicity_run, sine_initial_values, spatial_weak_error_curve, temporal_study, ErgodicitySetup,
    MonteCarlo, Problem, RateTable, Reference, SpatialSetup, TemporalSetup,
};
use crate::integrator::{simulate_path, Record, SchemeConfig};
use crate::model::nemytskii;
use crate::noise::{beta_max, sample_increments, IncrementBlock};
use crate::oracle::{
    brute_force_galerkin_cubic, continuous_moments, discrete_moments, discrete_stationary_variance,
    gaussian_functional, GaussianFunctional, GaussianModeState, LinearModel,
};
use crate::spectral::{to_grid, SpectralField};

pub use config::{parse_config, Assignments, Command, InitialProfile, RunConfig};
pub use output::{artifact_path, preflight, Artifact};

#[derive(Debug, Parser)]
#[command(
    name = "spde",
    version,
    about = "Implicit Euler / spectral Galerkin SPDE experiments"
)]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// Sectioned key = value file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one key, e.g. --set scheme.dt=2^-8. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads, 0 for one per core.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output path prefix.
    #[arg(long)]
    pub out: Option<String>,
    /// Print the accepted keys with their defaults and exit.
    #[arg(long)]
    pub list_keys: bool,
}

/// File, then `SPDE_*` environment, then `--set`, then dedicated flags.
pub fn resolve<I>(args: &Args, env: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut sources = Vec::new();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SpdeError::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
        sources.push(
            Assignments::from_file(&text, &path.display().to_string())
                .map_err(SpdeError::Config)?,
        );
    }
    sources.push(Assignments::from_env(env));
    sources.push(Assignments::from_flags(&args.set).map_err(SpdeError::Config)?);
    let mut flags = Assignments::default();
    if let Some(s) = args.seed {
        flags = flags.set("run.seed", s);
    }
    if let Some(w) = args.workers {
        flags = flags.set("run.workers", w);
    }
    if let Some(o) = &args.out {
        flags = flags.set("run.out", o);
    }
    sources.push(flags);
    parse_config(args.command, &sources)
}

/// Entry point of the binary; returns the process exit code.
pub fn main_entry() -> i32 {
    let args = Args::parse();
    if args.list_keys {
        print!("{}", config::describe_keys());
        return 0;
    }
    let cfg = match resolve(&args, std::env::vars()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("spde: {e}");
            return 2;
        }
    };
    match run(&cfg) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("spde: {e}");
            1
        }
    }
}

/// Pre-flight, compute, write. Wall time goes to `<prefix>.timing.json` so
/// the other outputs depend only on the configuration.
pub fn run(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    preflight(&cfg.out)?;
    let start = Instant::now();
    let artifacts = execute(cfg)?;
    let mut paths = output::write_artifacts(&cfg.out, &artifacts)?;
    let timing = json!({
        "wall_seconds": start.elapsed().as_secs_f64(),
        "workers": cfg.workers,
    });
    paths.extend(output::write_artifacts(
        &cfg.out,
        &[Artifact::new(".timing.json", format!("{timing:#}\n"))],
    )?);
    Ok(paths)
}

/// Runs the command and returns every output file's contents, JSON sidecar
/// last. Deterministic in the configuration.
pub fn execute(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let (mut artifacts, results) = match cfg.command {
        Command::Simulate => simulate(cfg)?,
        Command::WeakRate | Command::StrongRate => temporal(cfg)?,
        Command::SpatialRate => spatial(cfg)?,
        Command::Ergodicity => ergodicity(cfg)?,
        Command::OracleCheck => oracle_check(cfg)?,
        Command::DealiasCheck => dealias_check(cfg)?,
    };
    let config: serde_json::Map<String, Value> = cfg
        .canonical_entries()
        .into_iter()
        .filter(|(k, _)| *k != "run.workers" && *k != "run.out")
        .map(|(k, v)| (k.to_string(), Value::String(v)))
        .collect();
    let files: Vec<&str> = artifacts.iter().map(|a| a.suffix.as_str()).collect();
    let sidecar = json!({
        "command": cfg.command.name(),
        "config": config,
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
        "versions": {
            "spde-core": env!("CARGO_PKG_VERSION"),
            "output_format": 1,
        },
        "files": files,
        "results": results,
    });
    artifacts.push(Artifact::new(".json", format!("{sidecar:#}\n")));
    Ok(artifacts)
}

fn initial_value(cfg: &RunConfig, modes: usize) -> Result<SpectralField> {
    Ok(match cfg.initial {
        InitialProfile::Zero => SpectralField::zeros(modes, cfg.domain),
        InitialProfile::Sine => {
            sine_initial_values(&[cfg.initial_scale], modes, cfg.domain)?.remove(0)
        }
    })
}

fn steps(horizon: f64, dt: f64) -> usize {
    (horizon / dt).round() as usize
}

fn mc(cfg: &RunConfig) -> MonteCarlo {
    MonteCarlo::new(cfg.samples, cfg.seed).with_workers(cfg.workers)
}

fn slope_json(t: &RateTable) -> Value {
    json!({
        "slope": t.slope,
        "slope_se": t.slope_se,
        "fit_error": t.fit_error,
        "noise_floor_rows": t.rows.iter().filter(|r| r.noise_floor()).count(),
    })
}

fn push_rate(
    artifacts: &mut Vec<Artifact>,
    name: &str,
    title: &str,
    xlabel: &str,
    t: &RateTable,
    reference: f64,
) {
    artifacts.push(Artifact::new(format!("{name}.csv"), output::rate_csv(t)));
    if let Some(svg) = output::rate_svg(title, xlabel, &[(name, t)], reference) {
        artifacts.push(Artifact::new(format!("{name}.svg"), svg));
    }
}

type Outcome = (Vec<Artifact>, Value);

fn simulate(cfg: &RunConfig) -> Result<Outcome> {
    let n = cfg.modes;
    let k = steps(cfg.simulate_horizon, cfg.dt);
    let scheme = SchemeConfig::new(n, cfg.dt, k, &cfg.drift, cfg.domain)?.with_options(cfg.options);
    let x0 = initial_value(cfg, n)?;
    let block = if k == 0 {
        IncrementBlock::zeros(0, n, cfg.dt)
    } else {
        sample_increments(&cfg.noise.with_modes(n), cfg.seed, 0, k, cfg.dt)?
    };
    let path = simulate_path(
        &x0,
        &block,
        &scheme,
        &cfg.drift,
        Record::Stride(cfg.simulate_stride.max(1)),
    )?;
    let points = 4 * n - 1;
    let mut csv = String::from("t,x,u\n");
    for (t, u) in path.times().iter().zip(&path.states) {
        let g = to_grid(u, points)?;
        for (x, v) in g.abscissae().iter().zip(g.values()) {
            let _ = writeln!(
                csv,
                "{},{},{}",
                output::real(*t),
                output::real(*x),
                output::real(*v)
            );
        }
    }
    let results = json!({
        "steps": k,
        "max_iterations": path.max_iterations,
        "final_l2_norm": path.final_state().l2_norm(),
    });
    Ok((vec![Artifact::new("profile.csv", csv)], results))
}

fn temporal(cfg: &RunConfig) -> Result<Outcome> {
    let n = cfg.modes;
    let problem = Problem {
        drift: &cfg.drift,
        noise: cfg.noise.with_modes(n),
        x0: initial_value(cfg, n)?,
    };
    let setup = TemporalSetup {
        modes: n,
        options: cfg.options,
        horizon: cfg.rate.horizon,
        dt_list: cfg.rate.dt_list.clone(),
        reference: Reference::Fine {
            dt: cfg.rate.dt_ref,
        },
    };
    let beta = beta_max(&problem.noise, cfg.domain).beta;
    let weak = cfg.command == Command::WeakRate;
    let functionals = if weak {
        cfg.rate.functionals.clone()
    } else {
        Vec::new()
    };
    let out = temporal_study(&problem, &setup, &functionals, mc(cfg))?;
    let mut artifacts = Vec::new();
    let mut tables = serde_json::Map::new();
    if weak {
        for (f, t) in functionals.iter().zip(&out.weak) {
            let name = format!("weak_{}", f.name());
            push_rate(
                &mut artifacts,
                &name,
                "weak error in time",
                "dt",
                t,
                beta.min(1.0),
            );
            tables.insert(name, slope_json(t));
        }
    } else {
        let t = out.strong.as_ref().expect("fine reference");
        push_rate(
            &mut artifacts,
            "strong",
            "strong error in time",
            "dt",
            t,
            beta / 2.0,
        );
        tables.insert("strong".into(), slope_json(t));
    }
    let results = json!({
        "tables": tables,
        "beta": beta,
        "excluded": out.excluded,
        "max_iterations": out.max_iterations,
    });
    Ok((artifacts, results))
}

fn spatial(cfg: &RunConfig) -> Result<Outcome> {
    let s = &cfg.spatial;
    let problem = Problem {
        drift: &cfg.drift,
        noise: cfg.noise.with_modes(s.reference_modes),
        x0: initial_value(cfg, s.reference_modes)?,
    };
    let setup = SpatialSetup {
        options: cfg.options,
        modes_list: s.modes_list.clone(),
        reference_modes: s.reference_modes,
        dt: cfg.dt,
        horizon: s.horizon,
    };
    let beta = beta_max(&problem.noise, cfg.domain).beta;
    let out = spatial_weak_error_curve(&problem, &setup, &s.functionals, mc(cfg))?;
    let mut artifacts = Vec::new();
    let mut tables = serde_json::Map::new();
    for (f, t) in s.functionals.iter().zip(&out.weak) {
        let name = format!("spatial_{}", f.name());
        push_rate(
            &mut artifacts,
            &name,
            "weak error in space",
            "lambda_N",
            t,
            -beta.min(1.0),
        );
        tables.insert(name, slope_json(t));
    }
    let results = json!({
        "tables": tables,
        "beta": beta,
        "excluded": out.excluded,
        "max_iterations": out.max_iterations,
    });
    Ok((artifacts, results))
}

fn ergodicity(cfg: &RunConfig) -> Result<Outcome> {
    let e = &cfg.ergodicity;
    let setup = ErgodicitySetup {
        options: cfg.options,
        initial_values: sine_initial_values(&e.scales, cfg.modes, cfg.domain)?,
        modes: cfg.modes,
        dt: cfg.dt,
        horizon: e.horizon,
        stride: e.stride,
    };
    let out = ergodicity_run(&cfg.drift, &cfg.noise, &setup, &e.functionals, mc(cfg))?;
    let mut artifacts = vec![Artifact::new(
        "ergodicity.csv",
        output::ergodicity_csv(&out),
    )];
    if let Some(svg) = output::ergodicity_svg("ergodic averages", &out) {
        artifacts.push(Artifact::new("ergodicity.svg", svg));
    }
    let coincidence: Vec<Value> = out
        .coincidence()
        .iter()
        .map(|c| {
            json!({
                "functional": c.functional.name(),
                "max_diff": c.max_diff,
                "worst_ratio": c.worst_ratio,
                "holds": c.holds(),
            })
        })
        .collect();
    let results = json!({
        "initial_scales": e.scales,
        "functionals": e.functionals.iter().map(|f| f.name()).collect::<Vec<_>>(),
        "coincidence": coincidence,
        "excluded": out.excluded,
        "max_iterations": out.max_iterations,
    });
    Ok((artifacts, results))
}

struct Check {
    name: String,
    value: f64,
    bound: f64,
    pass: bool,
}

fn check_table(checks: &[Check]) -> String {
    let mut s = String::from("check,value,bound,pass\n");
    for c in checks {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            c.name,
            output::real(c.value),
            output::real(c.bound),
            c.pass
        );
    }
    s
}

fn checks_json(checks: &[Check]) -> Value {
    json!({
        "all_pass": checks.iter().all(|c| c.pass),
        "failed": checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect::<Vec<_>>(),
    })
}

fn oracle_check(cfg: &RunConfig) -> Result<Outcome> {
    let d = cfg.domain;
    let lm = LinearModel::new(cfg.drift.a1());
    let n = cfg.modes.min(16);
    let spec = cfg.noise.with_modes(n);
    let dt = cfg.dt;
    let k = 64;
    let mut checks = Vec::new();

    // zero noise: the scheme's mean path is the per-mode recursion
    let x0 = SpectralField::new((1..=n).map(|j| 1.0 / j as f64).collect(), d)?;
    let scheme = SchemeConfig::new(n, dt, k, &lm, d)?.with_options(cfg.options);
    let path = simulate_path(
        &x0,
        &IncrementBlock::zeros(k, n, dt),
        &scheme,
        &lm,
        Record::Final,
    )?;
    let exact = discrete_moments(&GaussianModeState::deterministic(&x0), k, dt, lm, &spec, d)?;
    let err = max_abs(path.final_state().coeffs(), &exact.mean);
    checks.push(Check {
        name: "scheme_mean_vs_recursion".into(),
        value: err,
        bound: 1e-10,
        pass: err <= 1e-10,
    });

    // unit impulse at step 0: by linearity the variance after k steps is
    // q dt sum_i x_i^2 over the impulse response
    let mut impulse = vec![0.0; k * n];
    impulse[..n].fill(1.0);
    let block = IncrementBlock::from_rows(impulse, k, n, dt)?;
    let resp = simulate_path(
        &SpectralField::zeros(n, d),
        &block,
        &scheme,
        &lm,
        Record::Every,
    )?;
    let q = spec.variances();
    let var: Vec<f64> = (0..n)
        .map(|j| {
            q[j] * dt
                * resp.states[1..]
                    .iter()
                    .map(|s| s.coeffs()[j].powi(2))
                    .sum::<f64>()
        })
        .collect();
    let zero = GaussianModeState::new(vec![0.0; n], vec![0.0; n])?;
    let exact = discrete_moments(&zero, k, dt, lm, &spec, d)?;
    let err = max_abs(&var, &exact.var);
    checks.push(Check {
        name: "scheme_variance_vs_recursion".into(),
        value: err,
        bound: 1e-10,
        pass: err <= 1e-10,
    });

    let long = discrete_moments(&zero, 20_000, dt, lm, &spec, d)?;
    let err = (1..=n)
        .map(|j| {
            let v = discrete_stationary_variance(q[j - 1], lm.rate(d, j), dt);
            ((long.var[j - 1] - v) / v).abs()
        })
        .fold(0.0, f64::max);
    checks.push(Check {
        name: "stationary_variance".into(),
        value: err,
        bound: 1e-12,
        pass: err <= 1e-12,
    });

    let state = GaussianModeState::new(vec![0.3, -0.2, 0.1], vec![0.5, 0.25, 0.1])?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let draws = 1_000_000;
    let mut acc = [[0.0f64; 2]; 3];
    for _ in 0..draws {
        let s: f64 = state
            .mean
            .iter()
            .zip(&state.var)
            .map(|(m, v)| {
                let z: f64 = rng.sample(StandardNormal);
                (m + v.sqrt() * z).powi(2)
            })
            .sum();
        for (a, x) in acc.iter_mut().zip([s, (-s).exp(), s * s]) {
            a[0] += x;
            a[1] += x * x;
        }
    }
    for ((name, phi), a) in [
        ("gaussian_norm_sq", GaussianFunctional::NormSq),
        ("gaussian_exp_neg_norm_sq", GaussianFunctional::ExpNegNormSq),
        ("gaussian_norm_4", GaussianFunctional::Norm4),
    ]
    .into_iter()
    .zip(acc)
    {
        let m = a[0] / draws as f64;
        let se = ((a[1] / draws as f64 - m * m) / draws as f64).sqrt();
        let z = (m - gaussian_functional(&state, phi)).abs() / se;
        checks.push(Check {
            name: format!("{name}_z"),
            value: z,
            bound: 3.0,
            pass: z <= 3.0,
        });
    }

    // first-order agreement of the discrete and continuous laws at t = 1
    let start = GaussianModeState::new(vec![1.0, 0.5, 0.25], vec![0.0; 3])?;
    let spec3 = cfg.noise.with_modes(3);
    let gap = |h: f64| -> Result<Vec<f64>> {
        let steps = (1.0 / h).round() as usize;
        let a = discrete_moments(&start, steps, h, lm, &spec3, d)?;
        let b = continuous_moments(&start, steps as f64 * h, lm, &spec3, d)?;
        Ok((0..3)
            .map(|j| (a.mean[j] - b.mean[j]).abs() + (a.var[j] - b.var[j]).abs())
            .collect())
    };
    let (coarse, fine) = (gap(2f64.powi(-10))?, gap(2f64.powi(-11))?);
    for j in 0..3 {
        let r = coarse[j] / fine[j];
        checks.push(Check {
            name: format!("halving_ratio_mode_{}", j + 1),
            value: r,
            bound: 2.3,
            pass: (1.7..=2.3).contains(&r),
        });
    }

    let results = checks_json(&checks);
    Ok((
        vec![Artifact::new("oracle.csv", check_table(&checks))],
        results,
    ))
}

fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn dealias_check(cfg: &RunConfig) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut checks = Vec::new();
    for n in [2usize, 4, 8, 16] {
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let c = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let u = SpectralField::new(c, cfg.domain)?;
            let fast = nemytskii(&u, n, &cfg.drift);
            let slow = brute_force_galerkin_cubic(&u, n, &cfg.drift)?;
            worst = worst.max(max_abs(fast.coeffs(), slow.coeffs()));
        }
        checks.push(Check {
            name: format!("modes_{n}"),
            value: worst,
            bound: 1e-12,
            pass: worst <= 1e-12,
        });
    }
    let results = checks_json(&checks);
    Ok((
        vec![Artifact::new("dealias.csv", check_table(&checks))],
        results,
    ))
}
