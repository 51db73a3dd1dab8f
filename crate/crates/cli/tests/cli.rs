use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rcac-fw"));
    cmd.env_remove("RCAC_FW_OUT");
    cmd
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/scenarios")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn short_run_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "--duration", "2", "--out"])
        .arg(tmp.path())
        .arg(scenarios().join("benchmark.toml"))
        .output()
        .unwrap();
    // Two seconds is far too short to reach every waypoint.
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("benchmark");
    for f in [
        "flight_log.csv",
        "gains.csv",
        "report.toml",
        "trajectory.svg",
        "gains.svg",
    ] {
        assert!(dir.join(f).is_file(), "missing {f}");
    }
    let report = std::fs::read_to_string(dir.join("report.toml")).unwrap();
    assert!(report.contains("status = \"mission_incomplete\""));

    let metrics = bin().arg("metrics").arg(dir.join("flight_log.csv")).output().unwrap();
    assert_eq!(code(&metrics), 0);
    let text = String::from_utf8(metrics.stdout).unwrap();
    assert!(text.contains("j_traj_m = "));
}

#[test]
fn env_var_sets_output_root() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .env("RCAC_FW_OUT", tmp.path())
        .args([
            "run",
            "--duration",
            "0.5",
            "--adaptive",
            "on",
            "--stuck-left-aileron",
            "0.05@0.1",
        ])
        .arg(scenarios().join("benchmark.toml"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 4);
    assert!(tmp.path().join("benchmark/flight_log.csv").is_file());
}

#[test]
fn unpowered_cell_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "--alpha-d", "0", "--adaptive", "off", "--out"])
        .arg(tmp.path())
        .arg(scenarios().join("benchmark.toml"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha_d"));
}

#[test]
fn matrix_without_configs_is_a_usage_error() {
    let out = bin().args(["matrix", "--benchmark", "benchmark"]).output().unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn matrix_with_unknown_benchmark_fails() {
    let out = bin()
        .args(["matrix", "--benchmark", "nope", "--duration", "0.1"])
        .arg(scenarios().join("benchmark.toml"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
}

#[test]
fn small_matrix_tabulates_normalized_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let s = scenarios();
    let out = bin()
        .args(["matrix", "--benchmark", "benchmark", "--duration", "25", "--out"])
        .arg(tmp.path())
        .arg(s.join("benchmark.toml"))
        .arg(s.join("adaptive_a1.toml"))
        .arg(s.join("fixed_a05.toml"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.lines().any(|l| l.starts_with("benchmark") && l.contains("1.000")));
    assert!(table.contains("adaptive_a1"));
    for f in [
        "comparison.txt",
        "trajectories.svg",
        "gains.svg",
        "fixed_a05/flight_log.csv",
    ] {
        assert!(tmp.path().join(f).is_file(), "missing {f}");
    }
}

#[test]
fn missing_config_names_the_file() {
    let out = bin().args(["run", "/no/such/scenario.toml"]).output().unwrap();
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/scenario.toml"));
}
