use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{AdaptiveSet, AttitudeSetpoint, AutopilotGains, LoopId, RateMeasurements};
use crate::error::{Error, Result};
use crate::vehicle::GRAVITY;

/// Sign of the (1,3) entry of the Euler-rate-to-body-rate matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KinematicsConvention {
    /// `-sin Θ`, the rigid-body kinematics.
    #[default]
    Standard,
    /// `+sin Θ`, as typeset in the PX4 description; kept for comparison runs.
    Literal,
}

/// `Θ̇_s = k_θ(Θ_s - Θ_m) + u_Θ`, `Φ̇_s = k_φ(Φ_s - Φ_m) + u_Φ`.
/// Returns `(pitch_rate_s, roll_rate_s)`.
pub fn attitude_outer_loop(
    sp: &AttitudeSetpoint,
    meas: &RateMeasurements,
    gains: &AutopilotGains,
    adaptive: &mut AdaptiveSet,
) -> Result<(f64, f64)> {
    if !sp.roll_s.is_finite() || !sp.pitch_s.is_finite() {
        return Err(Error::input("attitude setpoint must be finite"));
    }
    let pitch_err = sp.pitch_s - meas.pitch_m;
    let roll_err = sp.roll_s - meas.roll_m;
    let u_pitch = adaptive.contribution(LoopId::Pitch, pitch_err)?;
    let u_roll = adaptive.contribution(LoopId::Roll, roll_err)?;
    Ok((gains.k_theta * pitch_err + u_pitch, gains.k_phi * roll_err + u_roll))
}

/// Yaw-rate setpoint for a coordinated turn, `g tan Φ_s cos Θ_s / V_T`.
pub fn coordinated_turn_rate(roll_s: f64, pitch_s: f64, v_true: f64) -> Result<f64> {
    if !(v_true > 0.0) {
        return Err(Error::input(format!("true airspeed must be positive, got {v_true}")));
    }
    if !(roll_s.abs() < std::f64::consts::FRAC_PI_2) {
        return Err(Error::input("bank setpoint must be within ±90°"));
    }
    Ok(GRAVITY * roll_s.tan() * pitch_s.cos() / v_true)
}

fn euler_to_body_matrix(pitch: f64, roll: f64, convention: KinematicsConvention) -> Matrix3<f64> {
    let (sp, cp) = pitch.sin_cos();
    let (sr, cr) = roll.sin_cos();
    let corner = match convention {
        KinematicsConvention::Standard => -sp,
        KinematicsConvention::Literal => sp,
    };
    Matrix3::new(1.0, 0.0, corner, 0.0, cr, sr * cp, 0.0, -sr, cr * cp)
}

/// Maps `[Φ̇, Θ̇, Ψ̇]` to body rates at the measured attitude.
pub fn euler_rates_to_body(
    pitch_m: f64,
    roll_m: f64,
    euler_rates: &Vector3<f64>,
    convention: KinematicsConvention,
) -> Vector3<f64> {
    euler_to_body_matrix(pitch_m, roll_m, convention) * euler_rates
}

/// Inverse of [`euler_rates_to_body`] under the standard convention.
pub fn body_to_euler_rates(pitch: f64, roll: f64, omega: &Vector3<f64>) -> Vector3<f64> {
    let (sr, cr) = roll.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let tp = sp / cp;
    Matrix3::new(1.0, sr * tp, cr * tp, 0.0, cr, -sr, 0.0, sr / cp, cr / cp) * omega
}
