use std::process::Command as Process;

use spde_core::cli::{execute, parse_config, run, Assignments, Command};

fn small(command: Command, workers: usize, out: &str) -> spde_core::cli::RunConfig {
    let sets = Assignments::default()
        .set("scheme.modes", 8)
        .set("run.samples", 40)
        .set("run.workers", workers)
        .set("run.out", out)
        .set("rate.horizon", 0.25)
        .set("rate.dt_list", "2^-3,2^-4,2^-5")
        .set("rate.dt_ref", "2^-7")
        .set("spatial.modes_list", "2,4")
        .set("spatial.reference_modes", 8)
        .set("spatial.horizon", 0.25)
        .set("ergodicity.horizon", 0.25)
        .set("simulate.horizon", 0.25);
    parse_config(command, &[sets]).unwrap()
}

#[test]
fn artifacts_are_byte_identical_across_workers() {
    for command in [
        Command::WeakRate,
        Command::StrongRate,
        Command::SpatialRate,
        Command::Ergodicity,
    ] {
        let one = execute(&small(command, 1, "a")).unwrap();
        assert_eq!(
            one,
            execute(&small(command, 2, "b")).unwrap(),
            "{}",
            command.name()
        );
        assert_eq!(
            one,
            execute(&small(command, 8, "c")).unwrap(),
            "{}",
            command.name()
        );
    }
}

#[test]
fn run_writes_tables_plots_and_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("out/weak").display().to_string();
    let paths = run(&small(Command::WeakRate, 1, &prefix)).unwrap();
    let names: Vec<String> = paths
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    for want in ["weak_weak_cos_norm_sq.csv", "weak.json", "weak.timing.json"] {
        assert!(
            names.iter().any(|n| n == want),
            "{want} missing from {names:?}"
        );
    }
    let csv = std::fs::read_to_string(dir.path().join("out/weak_weak_cos_norm_sq.csv")).unwrap();
    assert!(csv.starts_with("h,err,se,n\n"));
    assert_eq!(csv.lines().count(), 4);

    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/weak.json")).unwrap())
            .unwrap();
    assert_eq!(sidecar["seed"], 0);
    assert_eq!(sidecar["config_hash"].as_str().unwrap().len(), 64);
    assert!(sidecar.get("wall_seconds").is_none());

    // a rerun reproduces everything but the timing file
    let first: Vec<Vec<u8>> = paths
        .iter()
        .filter(|p| !p.ends_with("weak.timing.json"))
        .map(|p| std::fs::read(p).unwrap())
        .collect();
    let again = run(&small(Command::WeakRate, 2, &prefix)).unwrap();
    let second: Vec<Vec<u8>> = again
        .iter()
        .filter(|p| !p.ends_with("weak.timing.json"))
        .map(|p| std::fs::read(p).unwrap())
        .collect();
    assert_eq!(first, second);
}

#[test]
fn oversized_step_is_rejected_before_running() {
    let sets = Assignments::default()
        .set("model.a1", 12)
        .set("scheme.dt", "2^-2");
    let err = parse_config(Command::Ergodicity, &[sets])
        .unwrap_err()
        .to_string();
    assert!(err.contains("0.2346"), "{err}");
}

#[test]
fn binary_reports_configuration_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = Process::new(env!("CARGO_BIN_EXE_spde"))
        .args(["weak-rate", "--set", "scheme.bogus=1", "--out"])
        .arg(dir.path().join("x"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("scheme.bogus"));

    let out = Process::new(env!("CARGO_BIN_EXE_spde"))
        .arg("simulate")
        .env("SPDE_SCHEME_MODES", "8")
        .env("SPDE_SIMULATE_HORIZON", "2^-4")
        .args(["--seed", "3", "--out"])
        .arg(dir.path().join("sim"))
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let profile = std::fs::read_to_string(dir.path().join("sim_profile.csv")).unwrap();
    assert!(profile.starts_with("t,x,u\n"));
}

#[test]
fn unwritable_prefix_fails_before_any_work() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let prefix = blocker.join("sub/run").display().to_string();
    assert!(run(&small(Command::WeakRate, 1, &prefix)).is_err());
}
