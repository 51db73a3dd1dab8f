//! Retrospective cost adaptive control (RCAC) augmentation of a fixed-wing
//! cascaded autopilot, with a deterministic 6-DOF simulator to exercise it.

// `!(x > 0.0)` rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub use nalgebra;

pub mod autopilot;
pub mod error;
pub mod log;
pub mod metrics;
pub mod mission;
pub mod rcac;
pub mod scenario;
pub mod vehicle;

pub use autopilot::{
    detune_gains, AdaptiveConfig, AttitudeSetpoint, AutopilotGains, InnerLoops, LoopId, RateMeasurements,
    SurfaceCommand,
};
pub use error::{Error, Result};
pub use log::{FlightLog, FlightRecord};
pub use metrics::{compute_metrics, compute_metrics_after, normalize, MetricReport};
pub use mission::{MissionPlan, PathSegment, Waypoint};
pub use rcac::{rcac_step, Parameterization, RcacHyperparams, RcacLoop, RcacState};
pub use scenario::{run_matrix, run_scenario, MatrixReport, RunOutcome, RunStatus, ScenarioConfig};
pub use vehicle::{AircraftParams, AircraftState, FailureConfig, Surface};
