mod common;

use common::csv_bytes;
use rcac_autopilot::{compute_metrics, run_scenario, FlightLog, ScenarioConfig};

fn short(adaptive: bool, stuck: bool) -> ScenarioConfig {
    let mut c = ScenarioConfig {
        duration: 8.0,
        ..Default::default()
    };
    c.adaptive.enabled = adaptive;
    if stuck {
        c.failure.stuck_surface = Some(rcac_autopilot::Surface::LeftAileron);
        c.failure.stuck_angle = 0.05;
        c.failure.stuck_time = 2.0;
    }
    c.validate().unwrap();
    c
}

#[test]
fn repeated_runs_write_identical_bytes() {
    for (adaptive, stuck) in [(false, false), (true, false), (true, true)] {
        let c = short(adaptive, stuck);
        let a = csv_bytes(&run_scenario(&c).unwrap().log);
        let b = csv_bytes(&run_scenario(&c).unwrap().log);
        assert_eq!(a, b, "adaptive = {adaptive}, stuck = {stuck}");
    }
}

#[test]
fn csv_round_trip_is_stable() {
    let out = run_scenario(&short(true, false)).unwrap();
    let first = csv_bytes(&out.log);
    let parsed = FlightLog::read_csv(first.as_slice()).unwrap();
    parsed.validate().unwrap();
    assert_eq!(parsed.len(), out.log.len());
    assert_eq!(csv_bytes(&parsed), first);

    let direct = compute_metrics(&out.log).unwrap();
    let reread = compute_metrics(&parsed).unwrap();
    for (a, b) in direct.as_array().iter().zip(reread.as_array()) {
        assert!((a - b).abs() <= 1e-8 * a.abs().max(1e-3));
    }
}

#[test]
fn outputs_land_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_scenario(&short(false, false)).unwrap();
    out.write_outputs(dir.path(), None).unwrap();
    let log = std::fs::read(dir.path().join("flight_log.csv")).unwrap();
    assert_eq!(log, csv_bytes(&out.log));
    let gains = std::fs::read_to_string(dir.path().join("gains.csv")).unwrap();
    assert_eq!(gains.lines().next().unwrap().split(',').count(), 21);
    let report = std::fs::read_to_string(dir.path().join("report.toml")).unwrap();
    assert!(report.contains("status"));
}

#[test]
fn log_has_one_record_per_inner_tick() {
    let c = short(false, false);
    let out = run_scenario(&c).unwrap();
    assert_eq!(out.log.len() as u64, c.ticks());
    out.log.validate().unwrap();
}
