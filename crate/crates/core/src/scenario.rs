//! Scenario configuration and the deterministic closed-loop run.
//!
//! A scenario is a TOML file. Keys missing from the file fall back to the
//! built-in defaults; `include = ["a.toml", ...]` pulls shared tables in
//! first (paths relative to the including file) and the including file
//! overrides them key by key.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autopilot::{
    detune_gains, AdaptiveConfig, AdaptiveSet, Allocation, AttitudeSetpoint, AutopilotGains, InnerLoops,
    KinematicsConvention, PositionController, PositionGains,
};
use crate::error::{Error, Result};
use crate::log::{FlightLog, FlightRecord};
use crate::metrics::{compute_metrics_after, normalize, MetricReport};
use crate::mission::{advance_mission, cross_track_error, MissionPlan};
use crate::vehicle::{
    apply_actuators, read_sensors, step_dynamics, trim_level_flight, ActuatorState, AircraftParams, FailureConfig,
};

/// Inner-loop (attitude, rate, RCAC) period, s.
pub const INNER_DT: f64 = 0.004;
/// Inner ticks per position-controller update (50 Hz).
pub const POSITION_DIVIDER: u64 = 5;
/// Inner ticks per mission update (10 Hz).
pub const MISSION_DIVIDER: u64 = 25;

const MAX_INCLUDE_DEPTH: usize = 8;
const BASELINE_GAINS: &str = include_str!("../../../configs/gains/baseline.toml");

fn default_name() -> String {
    "scenario".into()
}

fn default_duration() -> f64 {
    180.0
}

fn default_alpha_d() -> f64 {
    1.0
}

fn default_integrator_limit() -> f64 {
    0.3
}

fn default_mission() -> MissionPlan {
    MissionPlan::rectangle(400.0, 100.0, 20.0)
}

/// Fixed-gain baseline bundled with the crate.
pub fn baseline_gains() -> AutopilotGains {
    #[derive(Deserialize)]
    struct File {
        gains: AutopilotGains,
    }
    let file: File = toml::from_str(BASELINE_GAINS).expect("bundled gains parse");
    file.gains
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    /// Marks the run whose metrics normalize a matrix.
    #[serde(default)]
    pub benchmark: bool,
    /// Aircraft parameter file; the bundled desk UAV when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aircraft: Option<PathBuf>,
    #[serde(default = "default_duration")]
    pub duration: f64,
    /// Multiplies all 11 fixed autopilot gains.
    #[serde(default = "default_alpha_d")]
    pub alpha_d: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Reserved; runs are noise-free.
    #[serde(default)]
    pub seed: u64,
    /// Constant wind, NED m/s.
    #[serde(default)]
    pub wind: [f64; 3],
    #[serde(default)]
    pub kinematics: KinematicsConvention,
    /// Clamp on the rate-loop integrator state, rad.
    #[serde(default = "default_integrator_limit")]
    pub rate_integrator_limit: f64,
    /// Seconds excluded from the start of the metric window.
    #[serde(default)]
    pub metrics_warmup: f64,
    /// Test hook: RCAC runs but its gains are forced back to zero every step.
    #[serde(default)]
    pub pin_adaptive_gains: bool,
    #[serde(default = "default_mission")]
    pub mission: MissionPlan,
    #[serde(default = "baseline_gains")]
    pub gains: AutopilotGains,
    #[serde(default)]
    pub position: PositionGains,
    #[serde(default)]
    pub adaptive: AdaptiveConfig,
    #[serde(default)]
    pub failure: FailureConfig,
    #[serde(skip)]
    pub aircraft_params: AircraftParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty scenario uses defaults")
    }
}

fn merge(base: &mut toml::Table, top: toml::Table) {
    for (key, value) in top {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

fn load_table(path: &Path, depth: usize) -> Result<toml::Table> {
    let config_err = |detail: String| Error::Config {
        path: path.to_path_buf(),
        detail,
    };
    if depth > MAX_INCLUDE_DEPTH {
        return Err(config_err("include nesting too deep (cycle?)".into()));
    }
    let text = fs::read_to_string(path).map_err(|e| config_err(e.to_string()))?;
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| config_err(e.to_string()))?;
    let base_dir = path.parent().unwrap_or(Path::new("."));

    let mut merged = toml::Table::new();
    if let Some(includes) = table.remove("include") {
        let list = includes
            .as_array()
            .ok_or_else(|| config_err("`include` must be an array of paths".into()))?;
        for item in list {
            let rel = item
                .as_str()
                .ok_or_else(|| config_err("`include` entries must be strings".into()))?;
            merge(&mut merged, load_table(&base_dir.join(rel), depth + 1)?);
        }
    }
    if let Some(toml::Value::String(aircraft)) = table.get("aircraft") {
        let resolved = base_dir.join(aircraft);
        table.insert(
            "aircraft".into(),
            toml::Value::String(resolved.to_string_lossy().into_owned()),
        );
    }
    merge(&mut merged, table);
    Ok(merged)
}

impl ScenarioConfig {
    /// Reads a scenario file, resolving includes and the aircraft file, and
    /// validates the result.
    pub fn load(path: &Path) -> Result<Self> {
        let table = load_table(path, 0)?;
        let mut config = Self::from_table(table).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        config.resolve_aircraft()?;
        config.validate().map_err(|e| Error::Config {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        Ok(config)
    }

    /// Parses scenario text with no include support; the aircraft path, if
    /// any, is taken relative to the working directory.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::input(e.to_string()))?;
        let mut config = Self::from_table(table)?;
        config.resolve_aircraft()?;
        config.validate()?;
        Ok(config)
    }

    /// Overlays `table` on the serialized defaults, so partial tables keep
    /// the default values of the keys they omit.
    fn from_table(table: toml::Table) -> Result<Self> {
        let failure_sets_alpha = table
            .get("failure")
            .and_then(|f| f.as_table())
            .is_some_and(|f| f.contains_key("alpha_d"));
        let mut base = toml::Table::try_from(ScenarioConfig::default())
            .map_err(|e| Error::input(format!("serializing defaults: {e}")))?;
        merge(&mut base, table);
        let mut config: ScenarioConfig = base
            .try_into()
            .map_err(|e: toml::de::Error| Error::input(e.to_string()))?;
        if !failure_sets_alpha {
            config.failure.alpha_d = config.alpha_d;
        }
        Ok(config)
    }

    /// Sets the detuning factor, keeping the failure block in step.
    pub fn set_alpha_d(&mut self, alpha_d: f64) {
        self.alpha_d = alpha_d;
        self.failure.alpha_d = alpha_d;
    }

    /// Reloads `aircraft_params` from `aircraft` (or the bundled default).
    pub fn resolve_aircraft(&mut self) -> Result<()> {
        self.aircraft_params = match &self.aircraft {
            Some(path) => AircraftParams::load(path)?,
            None => AircraftParams::desk_uav(),
        };
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::input("duration must be positive"));
        }
        if !(self.alpha_d >= 0.0 && self.alpha_d.is_finite()) {
            return Err(Error::input("alpha_d must be finite and non-negative"));
        }
        if self.failure.alpha_d != self.alpha_d {
            return Err(Error::input(format!(
                "failure.alpha_d ({}) disagrees with alpha_d ({})",
                self.failure.alpha_d, self.alpha_d
            )));
        }
        if self.alpha_d == 0.0 && !self.adaptive.enabled {
            return Err(Error::input(
                "alpha_d = 0 with adaptation off commands nothing; enable adaptation or raise alpha_d",
            ));
        }
        if self.wind.iter().any(|w| !w.is_finite()) {
            return Err(Error::input("wind must be finite"));
        }
        if !(self.rate_integrator_limit >= 0.0) {
            return Err(Error::input("rate integrator limit must be non-negative"));
        }
        if !(self.metrics_warmup >= 0.0 && self.metrics_warmup < self.duration) {
            return Err(Error::input("metrics warm-up must lie in [0, duration)"));
        }
        self.aircraft_params.validate()?;
        self.mission.validate()?;
        self.gains.validate()?;
        self.position.validate()?;
        self.failure.validate(self.aircraft_params.actuators.max_deflection)?;
        for id in crate::autopilot::LoopId::ALL {
            let p = self.adaptive.loop_params(id);
            p.clone().validated()?;
            if (p.sample_time - INNER_DT).abs() > 1e-12 {
                return Err(Error::input(format!(
                    "{} loop sample time must equal the inner-loop period {INNER_DT}",
                    id.name()
                )));
            }
        }
        Ok(())
    }

    /// Number of inner ticks in the run.
    pub fn ticks(&self) -> u64 {
        (self.duration / INNER_DT).round() as u64
    }
}

/// How a run ended.
#[derive(Clone, Debug, PartialEq)]
pub enum RunStatus {
    /// Full duration flown and every waypoint reached at least once.
    Success,
    MissionIncomplete {
        reached: usize,
        total: usize,
    },
    /// An RCAC loop exceeded its divergence bound.
    Divergence {
        step: u64,
        detail: String,
    },
    /// The simulator refused to continue (non-finite state, pitch guard).
    SimulatorFault {
        step: u64,
        detail: String,
    },
}

impl RunStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Success => "success",
            RunStatus::MissionIncomplete { .. } => "mission_incomplete",
            RunStatus::Divergence { .. } => "divergence",
            RunStatus::SimulatorFault { .. } => "simulator_fault",
        }
    }

    pub fn is_success(&self) -> bool {
        matches!(self, RunStatus::Success)
    }

    /// The run stopped early.
    pub fn is_fault(&self) -> bool {
        matches!(self, RunStatus::Divergence { .. } | RunStatus::SimulatorFault { .. })
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunStatus::Success => write!(f, "success"),
            RunStatus::MissionIncomplete { reached, total } => {
                write!(f, "mission incomplete ({reached}/{total} waypoints reached)")
            }
            RunStatus::Divergence { step, detail } => {
                write!(f, "divergence at step {step}: {detail}")
            }
            RunStatus::SimulatorFault { step, detail } => {
                write!(f, "simulator fault at step {step}: {detail}")
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub name: String,
    pub benchmark: bool,
    pub status: RunStatus,
    pub log: FlightLog,
    /// `None` only when the run faulted before its first tick.
    pub metrics: Option<MetricReport>,
    pub waypoints_reached: Vec<bool>,
    pub max_abs_roll: f64,
    pub max_abs_pitch: f64,
    /// Sum over the five loops of the terminal ‖θ‖₂.
    pub terminal_gain_norm: f64,
}

/// Flies one scenario. Configuration errors are returned as `Err`; faults
/// during flight end the run early and are reported in the status.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunOutcome> {
    config.validate()?;
    let params = &config.aircraft_params;
    let plan = &config.mission;
    let wind = Vector3::from(config.wind);

    let start = &plan.waypoints[0];
    let trim = trim_level_flight(params, start.airspeed)?;
    let first_leg = plan.waypoints[1].point() - start.point();
    let heading = first_leg.y.atan2(first_leg.x);
    let mut state = trim.state(start.point(), heading);
    let mut actuators = ActuatorState::settled(trim.command());

    let gains = detune_gains(&config.gains, config.alpha_d)?;
    let mut adaptive = if config.adaptive.enabled {
        AdaptiveSet::new(&config.adaptive, INNER_DT)?
    } else {
        AdaptiveSet::disabled(INNER_DT)
    };
    adaptive.pin_zero = config.pin_adaptive_gains;
    let allocation = Allocation::from_aircraft(params).with_trim(Vector3::new(0.0, trim.elevator, 0.0));
    let mut inner = InnerLoops::new(
        gains,
        adaptive,
        allocation,
        config.rate_integrator_limit,
        INNER_DT,
        config.kinematics,
    );
    let mut position = PositionController::new(
        config.position.clone(),
        trim.alpha,
        trim.throttle,
        INNER_DT * POSITION_DIVIDER as f64,
    )?;

    let mut active = 1usize;
    let mut reached = vec![false; plan.waypoints.len()];
    reached[0] = true;
    let mut mission = advance_mission(plan, &state.position, active)?;
    let mut setpoint = AttitudeSetpoint {
        roll_s: 0.0,
        pitch_s: trim.alpha,
        thrust_s: trim.throttle,
    };

    let ticks = config.ticks();
    let mut log = FlightLog {
        records: Vec::with_capacity(ticks as usize),
    };
    let mut status = None;
    let (mut max_roll, mut max_pitch) = (0.0f64, 0.0f64);

    for k in 0..ticks {
        let t = k as f64 * INNER_DT;
        let meas = read_sensors(&state, &wind);

        if k % MISSION_DIVIDER == 0 {
            mission = advance_mission(plan, &meas.position, active)?;
            if let Some(i) = mission.reached {
                reached[i] = true;
            }
            active = mission.active_index;
        }
        if k % POSITION_DIVIDER == 0 {
            setpoint = match position.update(
                &mission.r_s,
                mission.airspeed_s,
                &meas.position,
                meas.rates.v_true,
                &meas.ground_velocity,
                &mission.segment,
            ) {
                Ok(sp) => sp,
                Err(e) => {
                    status = Some(RunStatus::SimulatorFault {
                        step: k,
                        detail: e.to_string(),
                    });
                    break;
                }
            };
        }

        let out = match inner.tick(&setpoint, &meas.rates) {
            Ok(out) => out,
            Err(Error::Divergence { detail, .. }) => {
                status = Some(RunStatus::Divergence { step: k, detail });
                break;
            }
            Err(e) => {
                status = Some(RunStatus::SimulatorFault {
                    step: k,
                    detail: e.to_string(),
                });
                break;
            }
        };

        max_roll = max_roll.max(state.roll().abs());
        max_pitch = max_pitch.max(state.pitch().abs());
        log.push(FlightRecord {
            time: t,
            roll_s: setpoint.roll_s,
            roll_m: meas.rates.roll_m,
            pitch_s: setpoint.pitch_s,
            pitch_m: meas.rates.pitch_m,
            xtrack: cross_track_error(&meas.position, plan),
            omega_s: out.omega_s.into(),
            omega_m: meas.rates.omega_m.into(),
            gains: inner.adaptive.padded_gains(),
            command: out.command,
            position: state.position.into(),
            velocity: state.velocity.into(),
            yaw: state.yaw(),
            airspeed: meas.rates.v_true,
            left_aileron: actuators.left_aileron,
            right_aileron: actuators.right_aileron,
        });

        actuators = apply_actuators(
            &out.command,
            &actuators,
            &config.failure,
            t,
            INNER_DT,
            &params.actuators,
        );
        state = match step_dynamics(&state, &actuators, params, &wind, INNER_DT, k) {
            Ok(next) => next,
            Err(e) => {
                status = Some(RunStatus::SimulatorFault {
                    step: k,
                    detail: e.to_string(),
                });
                break;
            }
        };
    }

    let status = status.unwrap_or_else(|| {
        let count = reached.iter().filter(|r| **r).count();
        if count == reached.len() {
            RunStatus::Success
        } else {
            RunStatus::MissionIncomplete {
                reached: count,
                total: reached.len(),
            }
        }
    });
    let metrics = if log.is_empty() {
        None
    } else {
        Some(compute_metrics_after(
            &log,
            config.metrics_warmup.min(log.records.last().map_or(0.0, |r| r.time)),
        )?)
    };
    Ok(RunOutcome {
        name: config.name.clone(),
        benchmark: config.benchmark,
        status,
        log,
        metrics,
        waypoints_reached: reached,
        max_abs_roll: max_roll,
        max_abs_pitch: max_pitch,
        terminal_gain_norm: inner.adaptive.total_gain_norm(),
    })
}

impl RunOutcome {
    /// Structured text summary (TOML).
    pub fn report(&self, normalized: Option<&MetricReport>) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario = {:?}", self.name);
        let _ = writeln!(s, "status = {:?}", self.status.label());
        let _ = writeln!(s, "detail = {:?}", self.status.to_string());
        let _ = writeln!(s, "ticks = {}", self.log.len());
        let _ = writeln!(
            s,
            "waypoints_reached = {}",
            self.waypoints_reached.iter().filter(|r| **r).count()
        );
        let _ = writeln!(s, "waypoints_total = {}", self.waypoints_reached.len());
        let _ = writeln!(s, "max_abs_roll_rad = {}", self.max_abs_roll);
        let _ = writeln!(s, "max_abs_pitch_rad = {}", self.max_abs_pitch);
        let _ = writeln!(s, "terminal_gain_norm = {}", self.terminal_gain_norm);
        if let Some(m) = &self.metrics {
            let _ = writeln!(s, "\n[metrics]");
            let _ = writeln!(s, "j_phi_rad = {}", m.j_phi);
            let _ = writeln!(s, "j_theta_rad = {}", m.j_theta);
            let _ = writeln!(s, "j_traj_m = {}", m.j_traj);
        }
        if let Some(n) = normalized {
            let _ = writeln!(s, "\n[normalized]");
            let _ = writeln!(s, "j_phi = {}", n.j_phi);
            let _ = writeln!(s, "j_theta = {}", n.j_theta);
            let _ = writeln!(s, "j_traj = {}", n.j_traj);
        }
        s
    }

    /// Writes `flight_log.csv`, `gains.csv` and `report.toml` into `dir`.
    pub fn write_outputs(&self, dir: &Path, normalized: Option<&MetricReport>) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.log
            .write_csv(BufWriter::new(File::create(dir.join("flight_log.csv"))?))?;
        self.log
            .write_gain_csv(BufWriter::new(File::create(dir.join("gains.csv"))?))?;
        fs::write(dir.join("report.toml"), self.report(normalized))?;
        Ok(())
    }
}

/// Results of a batch of scenarios normalized by its benchmark.
#[derive(Clone, Debug)]
pub struct MatrixReport {
    pub outcomes: Vec<RunOutcome>,
    pub benchmark: usize,
    /// Per-run metrics divided by the benchmark's; `None` for runs without metrics.
    pub normalized: Vec<Option<MetricReport>>,
}

/// Runs every scenario (in parallel) and normalizes by the single run marked
/// `benchmark`.
pub fn run_matrix(configs: &[ScenarioConfig]) -> Result<MatrixReport> {
    if configs.is_empty() {
        return Err(Error::input("no scenarios given"));
    }
    let marked: Vec<usize> = configs
        .iter()
        .enumerate()
        .filter(|(_, c)| c.benchmark)
        .map(|(i, _)| i)
        .collect();
    if marked.len() != 1 {
        return Err(Error::input(format!(
            "exactly one scenario must be the benchmark, found {}",
            marked.len()
        )));
    }
    let names: BTreeSet<&str> = configs.iter().map(|c| c.name.as_str()).collect();
    if names.len() != configs.len() {
        return Err(Error::input("scenario names must be unique"));
    }
    let benchmark = marked[0];
    let outcomes: Vec<RunOutcome> = configs.par_iter().map(run_scenario).collect::<Result<_>>()?;

    let bench = &outcomes[benchmark];
    let bench_metrics = match (&bench.status, &bench.metrics) {
        (status, Some(m)) if !status.is_fault() => *m,
        (status, _) => {
            return Err(Error::input(format!("benchmark run `{}` failed: {status}", bench.name)));
        }
    };
    let normalized = outcomes
        .iter()
        .map(|o| o.metrics.as_ref().map(|m| normalize(m, &bench_metrics)).transpose())
        .collect::<Result<_>>()?;
    Ok(MatrixReport {
        outcomes,
        benchmark,
        normalized,
    })
}

impl MatrixReport {
    /// Fixed-width comparison table of normalized metrics.
    pub fn table(&self) -> String {
        let width = self.outcomes.iter().map(|o| o.name.len()).max().unwrap_or(8).max(8);
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<width$}  {:>8}  {:>8}  {:>8}  status",
            "scenario", "J_phi", "J_theta", "J_traj"
        );
        for (o, n) in self.outcomes.iter().zip(&self.normalized) {
            let mark = if o.benchmark { " (benchmark)" } else { "" };
            match n {
                Some(n) => {
                    let _ = writeln!(
                        s,
                        "{:<width$}  {:>8.3}  {:>8.3}  {:>8.3}  {}{mark}",
                        o.name,
                        n.j_phi,
                        n.j_theta,
                        n.j_traj,
                        o.status.label()
                    );
                }
                None => {
                    let _ = writeln!(
                        s,
                        "{:<width$}  {:>8}  {:>8}  {:>8}  {}",
                        o.name, "-", "-", "-", o.status
                    );
                }
            }
        }
        s
    }
}
