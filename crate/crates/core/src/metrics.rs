//! RMS bank, elevation and cross-track error metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::log::FlightLog;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// RMS bank error, rad.
    pub j_phi: f64,
    /// RMS elevation error, rad.
    pub j_theta: f64,
    /// RMS cross-track error, m.
    pub j_traj: f64,
}

impl MetricReport {
    pub fn as_array(&self) -> [f64; 3] {
        [self.j_phi, self.j_theta, self.j_traj]
    }
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), x| (s + x * x, n + 1));
    (sum / n as f64).sqrt()
}

/// Metrics over every record of the log.
pub fn compute_metrics(log: &FlightLog) -> Result<MetricReport> {
    compute_metrics_after(log, 0.0)
}

/// Metrics over records with `time >= warmup` (seconds after the first record).
pub fn compute_metrics_after(log: &FlightLog, warmup: f64) -> Result<MetricReport> {
    let first = log
        .records
        .first()
        .ok_or_else(|| Error::input("cannot compute metrics of an empty log"))?
        .time;
    let window: Vec<_> = log.records.iter().filter(|r| r.time - first >= warmup).collect();
    if window.is_empty() {
        return Err(Error::input("warm-up window excludes every record"));
    }
    Ok(MetricReport {
        j_phi: rms(window.iter().map(|r| r.roll_s - r.roll_m)),
        j_theta: rms(window.iter().map(|r| r.pitch_s - r.pitch_m)),
        j_traj: rms(window.iter().map(|r| r.xtrack)),
    })
}

/// Elementwise ratio against a benchmark run.
pub fn normalize(report: &MetricReport, benchmark: &MetricReport) -> Result<MetricReport> {
    if benchmark.as_array().iter().any(|b| !(*b > 0.0)) {
        return Err(Error::input("benchmark metrics must all be positive"));
    }
    Ok(MetricReport {
        j_phi: report.j_phi / benchmark.j_phi,
        j_theta: report.j_theta / benchmark.j_theta,
        j_traj: report.j_traj / benchmark.j_traj,
    })
}
