//! Position controller: an energy-based longitudinal law standing in for
//! TECS, and a pursuit-style lateral guidance law.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::AttitudeSetpoint;
use crate::error::{Error, Result};
use crate::mission::PathSegment;
use crate::vehicle::GRAVITY;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositionGains {
    /// Time constant turning specific-energy error (m) into a rate demand (m/s).
    pub energy_time_constant: f64,
    /// Same for the energy-balance error.
    pub balance_time_constant: f64,
    /// Throttle per m/s of energy-rate error.
    pub thrust_p: f64,
    /// Throttle per m·s of integrated energy error.
    pub thrust_i: f64,
    pub thrust_integrator_limit: f64,
    /// Pitch (rad) per unit of balance flight-path demand.
    pub pitch_gain: f64,
    /// Look-ahead distance of the lateral law, m.
    pub l1_distance: f64,
    pub roll_limit: f64,
    pub pitch_limit: f64,
}

impl Default for PositionGains {
    fn default() -> Self {
        PositionGains {
            energy_time_constant: 5.0,
            balance_time_constant: 5.0,
            thrust_p: 0.1,
            thrust_i: 0.005,
            thrust_integrator_limit: 0.3,
            pitch_gain: 1.0,
            l1_distance: 50.0,
            roll_limit: 45f64.to_radians(),
            pitch_limit: 30f64.to_radians(),
        }
    }
}

impl PositionGains {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.energy_time_constant,
            self.balance_time_constant,
            self.l1_distance,
            self.roll_limit,
            self.pitch_limit,
        ];
        if positive.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::input(
                "position controller time constants and limits must be positive",
            ));
        }
        if !(self.roll_limit < std::f64::consts::FRAC_PI_2) {
            return Err(Error::input("roll limit must be below 90°"));
        }
        Ok(())
    }
}

/// Bank command from a pursuit law: aim at the point `L1` ahead on the
/// active leg and command `a = 2 V_G² sin η / L1` toward it, `Φ = atan(a/g)`.
/// Positive is a right turn.
pub fn lateral_bank_command(
    position: &Vector2<f64>,
    ground_velocity: &Vector2<f64>,
    segment: &PathSegment,
    l1_distance: f64,
    roll_limit: f64,
) -> Result<f64> {
    let start = segment.start.xy();
    let leg = segment.end.xy() - start;
    let length = leg.norm();
    if !(length > 1e-9) {
        return Err(Error::input("path segment has zero horizontal length"));
    }
    let dir = leg / length;
    let rel = position - start;
    let along = rel.dot(&dir);
    let foot = start + dir * along;
    let offset = (position - foot).norm();
    let ahead = if offset < l1_distance {
        (l1_distance * l1_distance - offset * offset).sqrt()
    } else {
        0.0
    };
    let los = foot + dir * ahead - position;

    let speed = ground_velocity.norm();
    let heading = if speed > 0.1 { ground_velocity / speed } else { dir };
    let eta = (heading.x * los.y - heading.y * los.x).atan2(heading.dot(&los));
    let accel = 2.0 * speed * speed * eta.sin() / l1_distance;
    Ok((accel / GRAVITY).atan().clamp(-roll_limit, roll_limit))
}

/// Stateful longitudinal + lateral position controller.
#[derive(Clone, Debug)]
pub struct PositionController {
    pub gains: PositionGains,
    pub trim_pitch: f64,
    pub trim_throttle: f64,
    sample_time: f64,
    thrust_integral: f64,
    previous: Option<(f64, f64)>,
}

impl PositionController {
    pub fn new(gains: PositionGains, trim_pitch: f64, trim_throttle: f64, sample_time: f64) -> Result<Self> {
        gains.validate()?;
        Ok(PositionController {
            gains,
            trim_pitch,
            trim_throttle,
            sample_time,
            thrust_integral: 0.0,
            previous: None,
        })
    }

    /// Altitudes are taken as `-e₃ᵀr` of the down-pointing positions.
    pub fn update(
        &mut self,
        r_s: &Vector3<f64>,
        airspeed_s: f64,
        r_m: &Vector3<f64>,
        v_true: f64,
        ground_velocity: &Vector2<f64>,
        segment: &PathSegment,
    ) -> Result<AttitudeSetpoint> {
        if !(v_true > 0.0) {
            return Err(Error::input("true airspeed must be positive"));
        }
        let g = &self.gains;
        let altitude = -r_m.z;
        let altitude_s = -r_s.z;

        let (climb, accel) = match self.previous {
            Some((alt0, v0)) => ((altitude - alt0) / self.sample_time, (v_true - v0) / self.sample_time),
            None => (0.0, 0.0),
        };
        self.previous = Some((altitude, v_true));

        let potential_err = altitude_s - altitude;
        let kinetic_err = (airspeed_s * airspeed_s - v_true * v_true) / (2.0 * GRAVITY);
        let energy_err = potential_err + kinetic_err;
        let balance_err = potential_err - kinetic_err;
        let kinetic_rate = v_true * accel / GRAVITY;
        let energy_rate = climb + kinetic_rate;
        let balance_rate = climb - kinetic_rate;

        let thrust_unclipped = self.trim_throttle
            + g.thrust_p * (energy_err / g.energy_time_constant - energy_rate)
            + self.thrust_integral;
        let thrust_s = thrust_unclipped.clamp(0.0, 1.0);
        if thrust_s == thrust_unclipped {
            self.thrust_integral = (self.thrust_integral + g.thrust_i * energy_err * self.sample_time)
                .clamp(-g.thrust_integrator_limit, g.thrust_integrator_limit);
        }

        let path_demand = (balance_err / g.balance_time_constant - balance_rate) / v_true;
        let pitch_s = (self.trim_pitch + g.pitch_gain * path_demand).clamp(-g.pitch_limit, g.pitch_limit);

        let roll_s = lateral_bank_command(&r_m.xy(), ground_velocity, segment, g.l1_distance, g.roll_limit)?;

        Ok(AttitudeSetpoint {
            roll_s,
            pitch_s,
            thrust_s,
        })
    }
}
