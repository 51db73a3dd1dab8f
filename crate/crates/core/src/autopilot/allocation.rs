use nalgebra::Vector3;

use super::SurfaceCommand;
use crate::vehicle::AircraftParams;

/// Diagonal map from angular-acceleration setpoint to surfaces.
#[derive(Clone, Debug, PartialEq)]
pub struct Allocation {
    /// rad per rad/s² for (aileron, elevator, rudder).
    pub gains: Vector3<f64>,
    /// Surface trim offsets added before saturation, rad.
    pub trim: Vector3<f64>,
    pub max_deflection: f64,
}

impl Allocation {
    pub fn from_aircraft(params: &AircraftParams) -> Self {
        Allocation {
            gains: Vector3::new(
                params.allocation.aileron,
                params.allocation.elevator,
                params.allocation.rudder,
            ),
            trim: Vector3::zeros(),
            max_deflection: params.actuators.max_deflection,
        }
    }

    pub fn with_trim(mut self, trim: Vector3<f64>) -> Self {
        self.trim = trim;
        self
    }
}

/// Surfaces saturate at ±`max_deflection`; throttle passes through, clipped
/// to 0..1. Surface faults are applied downstream by the actuator model.
pub fn allocate_controls(alpha_s: &Vector3<f64>, thrust_s: f64, alloc: &Allocation) -> SurfaceCommand {
    let limit = alloc.max_deflection;
    let surface = (alpha_s.component_mul(&alloc.gains) + alloc.trim).map(|d| d.clamp(-limit, limit));
    SurfaceCommand {
        aileron: surface.x,
        elevator: surface.y,
        rudder: surface.z,
        throttle: thrust_s.clamp(0.0, 1.0),
    }
}
