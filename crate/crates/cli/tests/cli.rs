use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn repo() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn m3p2i(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_m3p2i")).args(args).output().unwrap()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A copy of `name` next to the real domains, with `edit` applied to its text.
fn scenario_copy(dir: &Path, name: &str, edit: impl Fn(String) -> String) -> PathBuf {
    let text = std::fs::read_to_string(repo().join("scenarios").join(format!("{name}.toml"))).unwrap();
    let domain = repo().join("domains");
    let text = edit(text).replace("../domains", domain.to_str().unwrap());
    let path = dir.join(format!("{name}.toml"));
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn validate_accepts_every_shipped_scenario() {
    for entry in std::fs::read_dir(repo().join("scenarios")).unwrap() {
        let path = entry.unwrap().path();
        let out = m3p2i(&["validate", "--scenario", arg(&path)]);
        assert!(out.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stdout).contains(": ok"));
    }
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = scenario_copy(dir.path(), "middle_corner", |t| t.replace("format_version = 1", "format_version = 3"));
    assert_eq!(m3p2i(&["validate", "--scenario", arg(&bad)]).status.code(), Some(2));
    let missing = dir.path().join("absent.toml");
    assert_eq!(m3p2i(&["validate", "--scenario", arg(&missing)]).status.code(), Some(2));
    let good = repo().join("scenarios/middle_corner.toml");
    let out = m3p2i(&["run", "--scenario", arg(&good), "--mode", "hover", "--trials", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn timed_out_run_exits_with_one_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let short = scenario_copy(dir.path(), "middle_corner", |t| t.replace("timeout = 60.0", "timeout = 1.0"));
    let trace = dir.path().join("trace.ndjson");
    let summary = dir.path().join("summary.json");
    let out = m3p2i(&[
        "run",
        "--scenario",
        arg(&short),
        "--trials",
        "2",
        "--trace",
        arg(&trace),
        "--summary",
        arg(&summary),
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(report["trials"], 2);
    assert_eq!(report["successes"], 0);
    assert_eq!(std::fs::read_to_string(&trace).unwrap().lines().count(), 25);

    let figs = dir.path().join("figs");
    let out = m3p2i(&["plot", "--trace", arg(&trace), "--out", arg(&figs)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let traj = std::fs::read_to_string(figs.join("trajectory.svg")).unwrap();
    let mass = std::fs::read_to_string(figs.join("weight_mass.svg")).unwrap();
    assert!(traj.starts_with("<svg") && traj.contains("x [m]"));
    assert!(mass.contains("<polyline") && mass.contains("weight mass"));
}

#[test]
fn successful_run_and_benchmark_exit_with_zero() {
    let out = m3p2i(&["run", "--scenario", arg(&repo().join("scenarios/gripper_table.toml")), "--trials", "1", "--seed", "0"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["successes"], 1);

    let bench = repo().join("scenarios/benchmark_planar.toml");
    let out = m3p2i(&["run", "--scenario", arg(&bench), "--benchmark", "--benchmark-iterations", "20"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["iterations_per_second"].as_f64().unwrap() > 0.0);
    assert_eq!(report["plans"], 2);
}
