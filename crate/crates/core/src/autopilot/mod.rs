//! Cascaded fixed-wing autopilot: position → attitude → rate → allocation,
//! with additive RCAC augmentation on the attitude and rate loops.

mod adaptive;
mod allocation;
mod attitude;
mod guidance;
mod rate;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adaptive::{AdaptiveConfig, AdaptiveSet, LoopId, DEFAULT_INTEGRATOR_CLAMP};
pub use allocation::{allocate_controls, Allocation};
pub use attitude::{
    attitude_outer_loop, body_to_euler_rates, coordinated_turn_rate, euler_rates_to_body, KinematicsConvention,
};
pub use guidance::{lateral_bank_command, PositionController, PositionGains};
pub use rate::{rate_loop, RateIntegrator};

/// The 11 fixed gains of the cascade plus the trim airspeeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutopilotGains {
    /// Pitch attitude P gain, 1/s.
    pub k_theta: f64,
    /// Roll attitude P gain, 1/s.
    pub k_phi: f64,
    /// Rate feedforward diagonal (roll, pitch, yaw).
    pub k_ff: [f64; 3],
    /// Rate proportional diagonal.
    pub k_p: [f64; 3],
    /// Rate integral diagonal.
    pub k_i: [f64; 3],
    pub v_trim_true: f64,
    pub v_trim_indicated: f64,
}

impl AutopilotGains {
    pub const GAIN_COUNT: usize = 11;

    /// The 11 scalar gains in a fixed order.
    pub fn scalars(&self) -> [f64; 11] {
        let mut out = [0.0; 11];
        out[0] = self.k_theta;
        out[1] = self.k_phi;
        out[2..5].copy_from_slice(&self.k_ff);
        out[5..8].copy_from_slice(&self.k_p);
        out[8..11].copy_from_slice(&self.k_i);
        out
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_trim_true > 0.0 && self.v_trim_indicated > 0.0) {
            return Err(Error::input("trim airspeeds must be positive"));
        }
        if self.scalars().iter().any(|g| !g.is_finite()) {
            return Err(Error::input("gains must be finite"));
        }
        Ok(())
    }
}

/// Scales all 11 gains by `alpha_d`; trim airspeeds are untouched.
pub fn detune_gains(gains: &AutopilotGains, alpha_d: f64) -> Result<AutopilotGains> {
    if !(alpha_d >= 0.0) || !alpha_d.is_finite() {
        return Err(Error::input(format!("alpha_d must be nonnegative, got {alpha_d}")));
    }
    let scale = |v: [f64; 3]| v.map(|g| g * alpha_d);
    Ok(AutopilotGains {
        k_theta: gains.k_theta * alpha_d,
        k_phi: gains.k_phi * alpha_d,
        k_ff: scale(gains.k_ff),
        k_p: scale(gains.k_p),
        k_i: scale(gains.k_i),
        ..gains.clone()
    })
}

/// Output of the position controller.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttitudeSetpoint {
    pub roll_s: f64,
    pub pitch_s: f64,
    /// Normalized thrust, 0..1.
    pub thrust_s: f64,
}

/// Inputs of the attitude and rate loops.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateMeasurements {
    pub omega_m: Vector3<f64>,
    pub v_true: f64,
    pub v_indicated: f64,
    pub roll_m: f64,
    pub pitch_m: f64,
}

impl RateMeasurements {
    pub(crate) fn check_airspeeds(&self) -> Result<()> {
        if !(self.v_true > 0.0 && self.v_indicated > 0.0) {
            return Err(Error::input(format!(
                "airspeeds must be positive (true {}, indicated {})",
                self.v_true, self.v_indicated
            )));
        }
        Ok(())
    }
}

/// Surface deflections (rad) and throttle (0..1).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SurfaceCommand {
    pub aileron: f64,
    pub elevator: f64,
    pub rudder: f64,
    pub throttle: f64,
}

/// Everything the attitude/rate stage produced on one tick.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InnerLoopOutput {
    /// Euler-rate setpoints (roll, pitch, yaw).
    pub euler_rates_s: Vector3<f64>,
    pub omega_s: Vector3<f64>,
    pub alpha_s: Vector3<f64>,
    pub command: SurfaceCommand,
}

/// Attitude and rate stages with their state, run once per inner tick.
#[derive(Clone, Debug)]
pub struct InnerLoops {
    pub gains: AutopilotGains,
    pub adaptive: AdaptiveSet,
    pub integrator: RateIntegrator,
    pub allocation: Allocation,
    pub kinematics: KinematicsConvention,
}

impl InnerLoops {
    pub fn new(
        gains: AutopilotGains,
        adaptive: AdaptiveSet,
        allocation: Allocation,
        integrator_limit: f64,
        sample_time: f64,
        kinematics: KinematicsConvention,
    ) -> Self {
        InnerLoops {
            gains,
            adaptive,
            integrator: RateIntegrator::new(integrator_limit, sample_time),
            allocation,
            kinematics,
        }
    }

    pub fn tick(&mut self, sp: &AttitudeSetpoint, meas: &RateMeasurements) -> Result<InnerLoopOutput> {
        let (pitch_rate_s, roll_rate_s) = attitude_outer_loop(sp, meas, &self.gains, &mut self.adaptive)?;
        let yaw_rate_s = coordinated_turn_rate(sp.roll_s, sp.pitch_s, meas.v_true)?;
        let euler_rates_s = Vector3::new(roll_rate_s, pitch_rate_s, yaw_rate_s);
        let omega_s = euler_rates_to_body(meas.pitch_m, meas.roll_m, &euler_rates_s, self.kinematics);
        let alpha_s = rate_loop(&omega_s, meas, &self.gains, &mut self.integrator, &mut self.adaptive)?;
        let command = allocate_controls(&alpha_s, sp.thrust_s, &self.allocation);
        Ok(InnerLoopOutput {
            euler_rates_s,
            omega_s,
            alpha_s,
            command,
        })
    }
}
