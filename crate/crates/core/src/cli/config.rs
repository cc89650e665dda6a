//! Run configuration: a sectioned `key = value` file, `SPDE_*` environment
//! overrides and `--set` flags, applied in that order.
//!
//! ```text
//! # comment
//! [model]
//! a1 = 12
//! [rate]
//! dt_list = 2^-5, 2^-6, 2^-7
//! ```
//!
//! Every key is `section.key`. Inside a `[section]` block the prefix may be
//! dropped. Reals accept `b^e` (for instance `2^-6`). The environment
//! variable for `rate.dt_list` is `SPDE_RATE_DT_LIST`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::error::{Result, SpdeError};
use crate::experiments::Functional;
use crate::integrator::{step_constraint, Solver, SolverOptions};
use crate::model::CubicNonlinearity;
use crate::noise::NoiseSpec;
use crate::spectral::Domain;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum Command {
    Simulate,
    WeakRate,
    StrongRate,
    SpatialRate,
    Ergodicity,
    OracleCheck,
    DealiasCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::WeakRate => "weak-rate",
            Command::StrongRate => "strong-rate",
            Command::SpatialRate => "spatial-rate",
            Command::Ergodicity => "ergodicity",
            Command::OracleCheck => "oracle-check",
            Command::DealiasCheck => "dealias-check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Real,
    Count,
    Seed,
    Text,
    Reals,
    Counts,
    Functionals,
}

struct Key {
    name: &'static str,
    kind: Kind,
    default: &'static str,
}

const fn key(name: &'static str, kind: Kind, default: &'static str) -> Key {
    Key {
        name,
        kind,
        default,
    }
}

const KEYS: &[Key] = &[
    key("model.a3", Kind::Real, "1"),
    key("model.a2", Kind::Real, "0"),
    key("model.a1", Kind::Real, "5"),
    key("model.a0", Kind::Real, "0"),
    key("model.length", Kind::Real, "1"),
    key("noise.kappa", Kind::Real, "0"),
    // explicit q_1, q_2, ...; overrides kappa when nonempty
    key("noise.q", Kind::Reals, ""),
    key("scheme.modes", Kind::Count, "64"),
    key("scheme.dt", Kind::Real, "2^-6"),
    key("scheme.solver", Kind::Text, "newton"),
    key("scheme.tol", Kind::Real, "1e-10"),
    key("scheme.max_iter", Kind::Count, "50"),
    key("scheme.damping", Kind::Real, "0.5"),
    key("initial.profile", Kind::Text, "sine"),
    key("initial.scale", Kind::Real, "1"),
    key("run.samples", Kind::Count, "2000"),
    key("run.seed", Kind::Seed, "0"),
    key("run.workers", Kind::Count, "0"),
    key("run.out", Kind::Text, "spde"),
    key("simulate.horizon", Kind::Real, "1"),
    key("simulate.stride", Kind::Count, "8"),
    key("rate.horizon", Kind::Real, "1"),
    key("rate.dt_list", Kind::Reals, "2^-5, 2^-6, 2^-7, 2^-8, 2^-9"),
    key("rate.dt_ref", Kind::Real, "2^-11"),
    key(
        "rate.functionals",
        Kind::Functionals,
        "cos_norm_sq, exp_neg_norm_sq, sin_norm, norm_4",
    ),
    key("spatial.horizon", Kind::Real, "1"),
    key("spatial.modes_list", Kind::Counts, "4, 8, 16, 32"),
    key("spatial.reference_modes", Kind::Count, "128"),
    key(
        "spatial.functionals",
        Kind::Functionals,
        "cos_norm_sq, exp_neg_norm_sq, sin_norm, norm_4",
    ),
    key("ergodicity.horizon", Kind::Real, "5"),
    key("ergodicity.stride", Kind::Count, "16"),
    key("ergodicity.scales", Kind::Reals, "-2, -1, 0, 1, 2"),
    key(
        "ergodicity.functionals",
        Kind::Functionals,
        "sin_norm_sq, sqrt2_cos_norm_sq_shift, exp_neg_norm_sq",
    ),
];

/// Keys left out of the configuration hash: they change where and how fast
/// results are produced, not what they are.
const UNHASHED: &[&str] = &["run.workers", "run.out"];

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Real(f64),
    Count(usize),
    Seed(u64),
    Text(String),
    Reals(Vec<f64>),
    Counts(Vec<usize>),
    Functionals(Vec<Functional>),
}

impl Value {
    fn canonical(&self) -> String {
        fn join<T: std::fmt::Display>(xs: &[T]) -> String {
            xs.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        }
        match self {
            Value::Real(x) => format!("{x:?}"),
            Value::Count(n) => n.to_string(),
            Value::Seed(n) => n.to_string(),
            Value::Text(s) => s.clone(),
            Value::Reals(xs) => xs
                .iter()
                .map(|x| format!("{x:?}"))
                .collect::<Vec<_>>()
                .join(","),
            Value::Counts(xs) => join(xs),
            Value::Functionals(fs) => fs.iter().map(|f| f.name()).collect::<Vec<_>>().join(","),
        }
    }
}

fn parse_real(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    let x = match s.split_once('^') {
        Some((b, e)) => {
            let b: f64 = b.trim().parse().map_err(|_| format!("bad base in {s:?}"))?;
            let e: f64 = e
                .trim()
                .parse()
                .map_err(|_| format!("bad exponent in {s:?}"))?;
            b.powf(e)
        }
        None => s.parse().map_err(|_| format!("{s:?} is not a number"))?,
    };
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{s:?} is not finite"))
    }
}

fn list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty())
}

fn parse_value(kind: Kind, raw: &str) -> std::result::Result<Value, String> {
    let raw = raw.trim();
    let count = |t: &str| {
        t.parse::<usize>()
            .map_err(|_| format!("{t:?} is not a nonnegative integer"))
    };
    Ok(match kind {
        Kind::Real => Value::Real(parse_real(raw)?),
        Kind::Count => Value::Count(count(raw)?),
        Kind::Seed => Value::Seed(
            raw.parse()
                .map_err(|_| format!("{raw:?} is not an unsigned 64-bit integer"))?,
        ),
        Kind::Text => Value::Text(raw.to_string()),
        Kind::Reals => Value::Reals(
            list(raw)
                .map(parse_real)
                .collect::<std::result::Result<_, _>>()?,
        ),
        Kind::Counts => Value::Counts(
            list(raw)
                .map(count)
                .collect::<std::result::Result<_, _>>()?,
        ),
        Kind::Functionals => Value::Functionals(
            list(raw)
                .map(|t| {
                    Functional::from_name(t).ok_or_else(|| format!("unknown functional {t:?}"))
                })
                .collect::<std::result::Result<_, _>>()?,
        ),
    })
}

fn lookup(name: &str) -> Option<&'static Key> {
    KEYS.iter().find(|k| k.name == name)
}

/// Raw `key = value` assignments from one source, in order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignments {
    entries: Vec<(String, String, String)>,
}

impl Assignments {
    fn push(&mut self, key: String, value: String, origin: String) {
        self.entries.push((key, value, origin));
    }

    /// Parses the sectioned file format.
    pub fn from_file(text: &str, origin: &str) -> std::result::Result<Self, Vec<String>> {
        let mut out = Self::default();
        let mut errors = Vec::new();
        let mut section: Option<String> = None;
        for (i, line) in text.lines().enumerate() {
            let line = line.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = format!("{origin}:{}", i + 1);
            if let Some(rest) = line.strip_prefix('[') {
                match rest.strip_suffix(']') {
                    Some(name) if !name.trim().is_empty() => {
                        section = Some(name.trim().to_string())
                    }
                    _ => errors.push(format!("{at}: malformed section header {line:?}")),
                }
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                errors.push(format!("{at}: expected key = value, got {line:?}"));
                continue;
            };
            let k = k.trim();
            let full = match &section {
                Some(s) if !k.contains('.') => format!("{s}.{k}"),
                _ => k.to_string(),
            };
            out.push(full, v.trim().to_string(), at);
        }
        if errors.is_empty() {
            Ok(out)
        } else {
            Err(errors)
        }
    }

    /// `SPDE_SECTION_KEY=value` pairs; other variables are ignored.
    pub fn from_env<I: IntoIterator<Item = (String, String)>>(vars: I) -> Self {
        let mut out = Self::default();
        for (name, value) in vars {
            let Some(rest) = name.strip_prefix("SPDE_") else {
                continue;
            };
            let rest = rest.to_ascii_lowercase();
            let key = match rest.split_once('_') {
                Some((s, k)) => format!("{s}.{k}"),
                None => rest,
            };
            out.push(key, value, format!("environment {name}"));
        }
        out
    }

    /// `key=value` strings from the command line.
    pub fn from_flags(sets: &[String]) -> std::result::Result<Self, Vec<String>> {
        let mut out = Self::default();
        let mut errors = Vec::new();
        for s in sets {
            match s.split_once('=') {
                Some((k, v)) => out.push(
                    k.trim().to_string(),
                    v.trim().to_string(),
                    format!("--set {s}"),
                ),
                None => errors.push(format!("--set {s:?}: expected key=value")),
            }
        }
        if errors.is_empty() {
            Ok(out)
        } else {
            Err(errors)
        }
    }

    pub fn set(mut self, key: &str, value: impl ToString) -> Self {
        self.push(key.to_string(), value.to_string(), "command line".into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialProfile {
    /// `scale * sin(pi x / L)`.
    Sine,
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateSettings {
    pub horizon: f64,
    pub dt_list: Vec<f64>,
    pub dt_ref: f64,
    pub functionals: Vec<Functional>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialSettings {
    pub horizon: f64,
    pub modes_list: Vec<usize>,
    pub reference_modes: usize,
    pub functionals: Vec<Functional>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicitySettings {
    pub horizon: f64,
    pub stride: usize,
    pub scales: Vec<f64>,
    pub functionals: Vec<Functional>,
}

/// Validated configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub drift: CubicNonlinearity,
    pub domain: Domain,
    /// Noise law; its mode count is set per run.
    pub noise: NoiseSpec,
    pub modes: usize,
    pub dt: f64,
    pub options: SolverOptions,
    pub initial: InitialProfile,
    pub initial_scale: f64,
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
    pub out: String,
    pub simulate_horizon: f64,
    pub simulate_stride: usize,
    pub rate: RateSettings,
    pub spatial: SpatialSettings,
    pub ergodicity: ErgodicitySettings,
    values: BTreeMap<&'static str, Value>,
}

impl RunConfig {
    /// `key=value` lines of the resolved configuration, sorted by key.
    pub fn canonical_entries(&self) -> Vec<(&'static str, String)> {
        self.values
            .iter()
            .map(|(k, v)| (*k, v.canonical()))
            .collect()
    }

    /// SHA-256 over the command and every resolved key except worker count
    /// and output prefix.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("command={}\n", self.command.name()));
        for (k, v) in self.canonical_entries() {
            if !UNHASHED.contains(&k) {
                h.update(format!("{k}={v}\n"));
            }
        }
        h.finalize().iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    /// Step bound of the configured drift.
    pub fn step_bound(&self) -> f64 {
        step_constraint(&self.drift, self.domain)
    }
}

/// Resolves defaults, then each source in order, and validates the result.
/// All problems are reported together.
pub fn parse_config(command: Command, sources: &[Assignments]) -> Result<RunConfig> {
    let mut errors = Vec::new();
    let mut values: BTreeMap<&'static str, Value> = KEYS
        .iter()
        .map(|k| {
            (
                k.name,
                parse_value(k.kind, k.default).expect("defaults parse"),
            )
        })
        .collect();
    for src in sources {
        for (k, v, origin) in &src.entries {
            match lookup(k) {
                None => errors.push(format!("{origin}: unknown key {k:?}")),
                Some(spec) => match parse_value(spec.kind, v) {
                    Ok(val) => {
                        values.insert(spec.name, val);
                    }
                    Err(e) => errors.push(format!("{origin}: {k}: {e}")),
                },
            }
        }
    }
    // keys that failed to parse keep their defaults so the remaining fields
    // are still checked
    build(command, values, errors)
}

fn build(
    command: Command,
    values: BTreeMap<&'static str, Value>,
    mut errors: Vec<String>,
) -> Result<RunConfig> {
    let real = |k: &str| match values[k] {
        Value::Real(x) => x,
        _ => unreachable!("{k} is real"),
    };
    let count = |k: &str| match values[k] {
        Value::Count(n) => n,
        _ => unreachable!("{k} is a count"),
    };
    let text = |k: &str| match &values[k] {
        Value::Text(s) => s.clone(),
        _ => unreachable!("{k} is text"),
    };
    let reals = |k: &str| match &values[k] {
        Value::Reals(v) => v.clone(),
        _ => unreachable!("{k} is a real list"),
    };
    let counts = |k: &str| match &values[k] {
        Value::Counts(v) => v.clone(),
        _ => unreachable!("{k} is a count list"),
    };
    let functionals = |k: &str| match &values[k] {
        Value::Functionals(v) => v.clone(),
        _ => unreachable!("{k} is a functional list"),
    };

    let drift = CubicNonlinearity::new(
        real("model.a3"),
        real("model.a2"),
        real("model.a1"),
        real("model.a0"),
    )
    .map_err(|e| errors.push(format!("model: {e}")))
    .ok();
    let domain = Domain::new(real("model.length"))
        .map_err(|e| errors.push(format!("model.length: {e}")))
        .ok();
    let modes = count("scheme.modes");
    if modes == 0 {
        errors.push("scheme.modes must be at least 1".into());
    }
    let q = reals("noise.q");
    let noise = if q.is_empty() {
        NoiseSpec::power_law(real("noise.kappa"), modes.max(1))
    } else {
        NoiseSpec::explicit(q)
    }
    .map_err(|e| errors.push(format!("noise: {e}")))
    .ok();
    let solver = match text("scheme.solver").as_str() {
        "newton" => Solver::Newton,
        "fixed_point" => Solver::FixedPoint,
        other => {
            errors.push(format!(
                "scheme.solver: expected newton or fixed_point, got {other:?}"
            ));
            Solver::Newton
        }
    };
    let options = SolverOptions {
        solver,
        tol: real("scheme.tol"),
        max_iter: count("scheme.max_iter"),
        damping: real("scheme.damping"),
    };
    if !(options.tol > 0.0) {
        errors.push(format!("scheme.tol must be positive, got {}", options.tol));
    }
    if options.max_iter == 0 {
        errors.push("scheme.max_iter must be at least 1".into());
    }
    if !(options.damping > 0.0 && options.damping < 1.0) {
        errors.push(format!(
            "scheme.damping must lie in (0, 1), got {}",
            options.damping
        ));
    }
    let initial = match text("initial.profile").as_str() {
        "sine" => InitialProfile::Sine,
        "zero" => InitialProfile::Zero,
        other => {
            errors.push(format!(
                "initial.profile: expected sine or zero, got {other:?}"
            ));
            InitialProfile::Sine
        }
    };
    let samples = count("run.samples");
    if samples < 2 {
        errors.push(format!("run.samples must be at least 2, got {samples}"));
    }
    let out = text("run.out");
    if out.is_empty() {
        errors.push("run.out must not be empty".into());
    }

    // step sizes against the solvability bound
    let bound = match (&drift, domain) {
        (Some(m), Some(d)) => step_constraint(m, d),
        _ => f64::INFINITY,
    };
    let mut check_step = |name: &str, dt: f64| {
        if !(dt > 0.0) {
            errors.push(format!("{name} must be positive, got {dt}"));
        } else if dt > bound {
            errors.push(format!(
                "{name} = {dt} exceeds the solvability bound dt0 = {bound} (1 / (2 lambda_F - 2 lambda_1))"
            ));
        }
    };
    let dt = real("scheme.dt");
    check_step("scheme.dt", dt);
    let rate = RateSettings {
        horizon: real("rate.horizon"),
        dt_list: reals("rate.dt_list"),
        dt_ref: real("rate.dt_ref"),
        functionals: functionals("rate.functionals"),
    };
    for (i, &h) in rate.dt_list.iter().enumerate() {
        check_step(&format!("rate.dt_list[{i}]"), h);
    }
    check_step("rate.dt_ref", rate.dt_ref);
    let spatial = SpatialSettings {
        horizon: real("spatial.horizon"),
        modes_list: counts("spatial.modes_list"),
        reference_modes: count("spatial.reference_modes"),
        functionals: functionals("spatial.functionals"),
    };
    let ergodicity = ErgodicitySettings {
        horizon: real("ergodicity.horizon"),
        stride: count("ergodicity.stride"),
        scales: reals("ergodicity.scales"),
        functionals: functionals("ergodicity.functionals"),
    };

    let multiple = |a: f64, b: f64| {
        let r = a / b;
        r.round() >= 1.0 && (r - r.round()).abs() <= 1e-9 * r.round()
    };
    for (name, h) in [
        ("simulate.horizon", real("simulate.horizon")),
        ("rate.horizon", rate.horizon),
        ("spatial.horizon", spatial.horizon),
        ("ergodicity.horizon", ergodicity.horizon),
    ] {
        if !(h > 0.0) {
            errors.push(format!("{name} must be positive, got {h}"));
        }
    }
    match command {
        Command::Simulate => {
            if !multiple(real("simulate.horizon"), dt) {
                errors.push("simulate.horizon must be a multiple of scheme.dt".into());
            }
        }
        Command::WeakRate | Command::StrongRate => {
            if rate.dt_list.is_empty() {
                errors.push("rate.dt_list is empty".into());
            }
            for &h in &rate.dt_list {
                if !multiple(h, rate.dt_ref) {
                    errors.push(format!(
                        "rate.dt_list entry {h} is not a multiple of rate.dt_ref"
                    ));
                } else if !multiple(rate.horizon, h) {
                    errors.push(format!("rate.horizon is not a multiple of {h}"));
                }
            }
            if command == Command::WeakRate && rate.functionals.is_empty() {
                errors.push("rate.functionals is empty".into());
            }
        }
        Command::SpatialRate => {
            if spatial.modes_list.is_empty() || spatial.modes_list.contains(&0) {
                errors.push("spatial.modes_list needs positive entries".into());
            }
            if spatial
                .modes_list
                .iter()
                .any(|&n| n >= spatial.reference_modes)
            {
                errors.push(
                    "spatial.reference_modes must exceed every entry of spatial.modes_list".into(),
                );
            }
            if !multiple(spatial.horizon, dt) {
                errors.push("spatial.horizon must be a multiple of scheme.dt".into());
            }
            if spatial.functionals.is_empty() {
                errors.push("spatial.functionals is empty".into());
            }
        }
        Command::Ergodicity => {
            if ergodicity.scales.is_empty() {
                errors.push("ergodicity.scales is empty".into());
            }
            if !multiple(ergodicity.horizon, dt) {
                errors.push("ergodicity.horizon must be a multiple of scheme.dt".into());
            }
            if ergodicity.functionals.is_empty() {
                errors.push("ergodicity.functionals is empty".into());
            }
        }
        Command::OracleCheck | Command::DealiasCheck => {}
    }
    if let (Some(d), Command::OracleCheck) = (domain, command) {
        if d.eigenvalue(1) <= real("model.a1") {
            errors.push("oracle-check needs model.a1 below the first eigenvalue".into());
        }
    }

    if !errors.is_empty() {
        return Err(SpdeError::Config(errors));
    }
    let seed = match values["run.seed"] {
        Value::Seed(s) => s,
        _ => unreachable!(),
    };
    Ok(RunConfig {
        command,
        drift: drift.expect("validated"),
        domain: domain.expect("validated"),
        noise: noise.expect("validated"),
        modes,
        dt,
        options,
        initial,
        initial_scale: real("initial.scale"),
        samples,
        seed,
        workers: count("run.workers"),
        out,
        simulate_horizon: real("simulate.horizon"),
        simulate_stride: count("simulate.stride"),
        rate,
        spatial,
        ergodicity,
        values,
    })
}

/// Documented keys with their defaults, one `key = default` per line.
pub fn describe_keys() -> String {
    KEYS.iter()
        .map(|k| format!("{} = {}\n", k.name, k.default))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(sets: &[&str]) -> Assignments {
        Assignments::from_flags(&sets.iter().map(|s| s.to_string()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn defaults() {
        let c = parse_config(Command::WeakRate, &[]).unwrap();
        assert_eq!(c.modes, 64);
        assert_eq!(c.dt, 1.0 / 64.0);
        assert_eq!(c.samples, 2000);
        assert_eq!(c.seed, 0);
        assert_eq!(c.rate.dt_ref, 2f64.powi(-11));
        assert_eq!(c.rate.dt_list.len(), 5);
        assert_eq!(c.ergodicity.scales, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert_eq!(c.options, SolverOptions::default());
    }

    #[test]
    fn oversized_step_names_the_bound() {
        let err = parse_config(
            Command::Simulate,
            &[flags(&["model.a1=12", "scheme.dt=2^-2"])],
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("scheme.dt"), "{msg}");
        assert!(msg.contains("0.2346"), "{msg}");
    }

    #[test]
    fn unknown_keys_are_named_and_all_errors_listed() {
        let err = parse_config(
            Command::Simulate,
            &[flags(&["model.bogus=1", "scheme.modes=x", "run.samples=1"])],
        )
        .unwrap_err();
        let SpdeError::Config(list) = err else {
            panic!()
        };
        assert!(list.iter().any(|e| e.contains("model.bogus")));
        assert!(list.iter().any(|e| e.contains("scheme.modes")));
        assert!(list.iter().any(|e| e.contains("run.samples")));
        assert_eq!(list.len(), 3);
        let err = parse_config(
            Command::Simulate,
            &[flags(&["run.samples=1", "scheme.damping=2"])],
        )
        .unwrap_err();
        let SpdeError::Config(list) = err else {
            panic!()
        };
        assert_eq!(list.len(), 2);
    }

    #[test]
    fn file_sections_and_precedence() {
        let file = "# model\n[model]\na1 = 3 ; trailing\n\n[rate]\ndt_list = 2^-4, 2^-5, 2^-6\nrun.seed = 9\n";
        let f = Assignments::from_file(file, "cfg").unwrap();
        let env = Assignments::from_env(vec![
            ("SPDE_MODEL_A1".to_string(), "4".to_string()),
            ("HOME".to_string(), "/root".to_string()),
        ]);
        let c = parse_config(Command::WeakRate, &[f.clone(), env.clone()]).unwrap();
        assert_eq!(c.drift.a1(), 4.0);
        assert_eq!(c.seed, 9);
        assert_eq!(c.rate.dt_list, vec![0.0625, 0.03125, 0.015625]);
        let c = parse_config(Command::WeakRate, &[f, env, flags(&["model.a1=2"])]).unwrap();
        assert_eq!(c.drift.a1(), 2.0);
        assert!(Assignments::from_file("[model\n", "x").is_err());
        assert!(Assignments::from_file("novalue\n", "x").is_err());
        let bad_env = Assignments::from_env(vec![("SPDE_NOPE".to_string(), "1".to_string())]);
        assert!(parse_config(Command::Simulate, &[bad_env]).is_err());
    }

    #[test]
    fn hash_ignores_workers_and_output() {
        let a = parse_config(
            Command::WeakRate,
            &[flags(&["run.workers=8", "run.out=x/y"])],
        )
        .unwrap();
        let b = parse_config(Command::WeakRate, &[flags(&["rate.dt_ref=0.00048828125"])]).unwrap();
        let c = parse_config(Command::WeakRate, &[flags(&["run.seed=1"])]).unwrap();
        let d = parse_config(Command::StrongRate, &[]).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_ne!(a.hash(), d.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn rate_lists_must_nest() {
        assert!(parse_config(Command::WeakRate, &[flags(&["rate.dt_list=0.3"])]).is_err());
        assert!(parse_config(
            Command::WeakRate,
            &[flags(&["rate.dt_list=2^-5", "rate.horizon=0.1"])]
        )
        .is_err());
        assert!(parse_config(
            Command::SpatialRate,
            &[flags(&["spatial.reference_modes=16"])]
        )
        .is_err());
        assert!(parse_config(
            Command::Ergodicity,
            &[flags(&["ergodicity.functionals=cos_norm_sq,foo"])]
        )
        .is_err());
    }
}
