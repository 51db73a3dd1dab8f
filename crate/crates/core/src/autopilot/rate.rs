use nalgebra::Vector3;

use super::{AdaptiveSet, AutopilotGains, LoopId, RateMeasurements};
use crate::error::Result;

/// Per-axis `1/(q-1)` integrator of the rate error, `E_k = E_{k-1} + T_s e_{k-1}`,
/// clamped to ±`limit`.
#[derive(Clone, Debug, PartialEq)]
pub struct RateIntegrator {
    pub value: Vector3<f64>,
    last_error: Vector3<f64>,
    pub limit: f64,
    pub sample_time: f64,
}

impl RateIntegrator {
    pub fn new(limit: f64, sample_time: f64) -> Self {
        RateIntegrator {
            value: Vector3::zeros(),
            last_error: Vector3::zeros(),
            limit,
            sample_time,
        }
    }

    fn advance(&mut self, error: &Vector3<f64>) -> Vector3<f64> {
        let limit = self.limit;
        self.value = (self.value + self.last_error * self.sample_time).map(|x| x.clamp(-limit, limit));
        self.last_error = *error;
        self.value
    }
}

/// Angular-acceleration setpoint:
/// `(V_T0/V_T) k_ff∘ω_s + (V_I0/V_I)² (k_p∘e + k_i∘E) + u_ω`.
pub fn rate_loop(
    omega_s: &Vector3<f64>,
    meas: &RateMeasurements,
    gains: &AutopilotGains,
    integrator: &mut RateIntegrator,
    adaptive: &mut AdaptiveSet,
) -> Result<Vector3<f64>> {
    meas.check_airspeeds()?;
    let error = omega_s - meas.omega_m;
    let integral = integrator.advance(&error);

    let ff_scale = gains.v_trim_true / meas.v_true;
    let pi_scale = (gains.v_trim_indicated / meas.v_indicated).powi(2);
    let k_ff = Vector3::from(gains.k_ff);
    let k_p = Vector3::from(gains.k_p);
    let k_i = Vector3::from(gains.k_i);

    let adaptive_term = Vector3::new(
        adaptive.contribution(LoopId::RollRate, error.x)?,
        adaptive.contribution(LoopId::PitchRate, error.y)?,
        adaptive.contribution(LoopId::YawRate, error.z)?,
    );

    Ok(k_ff.component_mul(omega_s) * ff_scale
        + (k_p.component_mul(&error) + k_i.component_mul(&integral)) * pi_scale
        + adaptive_term)
}
