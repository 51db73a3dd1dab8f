//! Desk-scale rigid-body fixed-wing model.
//!
//! North-east-down Earth frame, Euler (roll, pitch, yaw) attitude, linear
//! aerodynamic coefficients, first-order actuators with saturation, and
//! stuck-surface fault injection. Integration is fixed-step RK4.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{Matrix3, SVector, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::autopilot::{RateMeasurements, SurfaceCommand};
use crate::error::{Error, Result};

pub const GRAVITY: f64 = 9.80665;

/// Hard pitch guard; the Euler kinematics are singular at ±90°.
pub const PITCH_GUARD: f64 = 89.0 * PI / 180.0;

const DEFAULT_AIRCRAFT: &str = include_str!("../../../configs/aircraft/desk_uav.toml");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AeroCoefficients {
    pub cl0: f64,
    pub cl_alpha: f64,
    pub cl_q: f64,
    pub cl_elevator: f64,
    pub cd0: f64,
    pub cd_induced: f64,
    pub cy_beta: f64,
    pub cy_rudder: f64,
    pub roll_beta: f64,
    pub roll_p: f64,
    pub roll_r: f64,
    pub roll_aileron: f64,
    pub pitch0: f64,
    pub pitch_alpha: f64,
    pub pitch_q: f64,
    pub pitch_elevator: f64,
    pub yaw_beta: f64,
    pub yaw_p: f64,
    pub yaw_r: f64,
    pub yaw_rudder: f64,
    pub yaw_aileron: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActuatorParams {
    pub max_deflection: f64,
    pub surface_time_constant: f64,
    pub throttle_time_constant: f64,
}

/// Diagonal allocation gains, rad of deflection per rad/s² commanded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationGains {
    pub aileron: f64,
    pub elevator: f64,
    pub rudder: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AircraftParams {
    pub name: String,
    pub mass: f64,
    pub inertia: [f64; 3],
    pub wing_area: f64,
    pub span: f64,
    pub chord: f64,
    pub air_density: f64,
    pub thrust_max: f64,
    pub v_trim_true: f64,
    pub v_trim_indicated: f64,
    /// Angle of attack and sideslip are clamped into ±this (linear-model range).
    pub alpha_limit: f64,
    pub aero: AeroCoefficients,
    pub actuators: ActuatorParams,
    pub allocation: AllocationGains,
}

impl Default for AircraftParams {
    fn default() -> Self {
        Self::desk_uav()
    }
}

impl AircraftParams {
    /// The bundled desk-scale airframe.
    pub fn desk_uav() -> Self {
        Self::from_toml_str(DEFAULT_AIRCRAFT).expect("bundled aircraft file is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let params: AircraftParams = toml::from_str(text).map_err(|e| Error::Config {
            path: "<aircraft>".into(),
            detail: e.to_string(),
        })?;
        params.validate()?;
        Ok(params)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config { detail, .. } => Error::Config {
                path: path.to_path_buf(),
                detail,
            },
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0) {
            return Err(Error::input("aircraft mass must be positive"));
        }
        if self.inertia.iter().any(|j| !(*j > 0.0)) {
            return Err(Error::input("inertia entries must be positive"));
        }
        if !(self.wing_area > 0.0 && self.span > 0.0 && self.chord > 0.0 && self.air_density > 0.0) {
            return Err(Error::input("geometry and density must be positive"));
        }
        if !(self.v_trim_true > 0.0 && self.v_trim_indicated > 0.0) {
            return Err(Error::input("trim airspeeds must be positive"));
        }
        if !(self.alpha_limit > 0.0) || !(self.actuators.max_deflection > 0.0) {
            return Err(Error::input("limits must be positive"));
        }
        if !(self.actuators.surface_time_constant > 0.0 && self.actuators.throttle_time_constant > 0.0) {
            return Err(Error::input("actuator time constants must be positive"));
        }
        Ok(())
    }

    /// Body angular acceleration per rad of (aileron, elevator, rudder) at `airspeed`.
    pub fn control_effectiveness(&self, airspeed: f64) -> Vector3<f64> {
        let qs = 0.5 * self.air_density * airspeed * airspeed * self.wing_area;
        Vector3::new(
            qs * self.span * self.aero.roll_aileron / self.inertia[0],
            qs * self.chord * self.aero.pitch_elevator / self.inertia[1],
            qs * self.span * self.aero.yaw_rudder / self.inertia[2],
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Surface {
    LeftAileron,
    Elevator,
    Rudder,
}

/// Gain detuning plus optional stuck-surface injection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailureConfig {
    #[serde(default = "one")]
    pub alpha_d: f64,
    #[serde(default)]
    pub stuck_surface: Option<Surface>,
    #[serde(default)]
    pub stuck_angle: f64,
    #[serde(default)]
    pub stuck_time: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for FailureConfig {
    fn default() -> Self {
        FailureConfig {
            alpha_d: 1.0,
            stuck_surface: None,
            stuck_angle: 0.0,
            stuck_time: 0.0,
        }
    }
}

impl FailureConfig {
    pub fn stuck_left_aileron(angle: f64, time: f64) -> Self {
        FailureConfig {
            stuck_surface: Some(Surface::LeftAileron),
            stuck_angle: angle,
            stuck_time: time,
            ..Default::default()
        }
    }

    pub fn validate(&self, max_deflection: f64) -> Result<()> {
        if !(self.alpha_d >= 0.0) || !self.alpha_d.is_finite() {
            return Err(Error::input("alpha_d must be a nonnegative number"));
        }
        if self.stuck_surface.is_some() {
            if !(self.stuck_angle.abs() <= max_deflection) {
                return Err(Error::input(format!(
                    "stuck angle {} exceeds the surface bound {max_deflection}",
                    self.stuck_angle
                )));
            }
            if !(self.stuck_time >= 0.0) {
                return Err(Error::input("stuck_time must be nonnegative"));
            }
        }
        Ok(())
    }

    fn stuck_at(&self, surface: Surface, t: f64) -> Option<f64> {
        match self.stuck_surface {
            Some(s) if s == surface && t >= self.stuck_time => Some(self.stuck_angle),
            _ => None,
        }
    }
}

/// Actual deflections (rad) and throttle, plus the last command.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ActuatorState {
    pub commanded: SurfaceCommand,
    pub left_aileron: f64,
    pub right_aileron: f64,
    pub elevator: f64,
    pub rudder: f64,
    pub throttle: f64,
}

impl ActuatorState {
    /// Actuators resting at the given (symmetric) command.
    pub fn settled(cmd: SurfaceCommand) -> Self {
        ActuatorState {
            left_aileron: cmd.aileron,
            right_aileron: -cmd.aileron,
            elevator: cmd.elevator,
            rudder: cmd.rudder,
            throttle: cmd.throttle,
            commanded: cmd,
        }
    }

    /// Roll-effective aileron deflection.
    pub fn aileron(&self) -> f64 {
        0.5 * (self.left_aileron - self.right_aileron)
    }
}

fn lag(actual: f64, target: f64, decay: f64) -> f64 {
    target + (actual - target) * decay
}

/// Moves every surface one step along its first-order lag, saturates it and
/// freezes a faulted surface at its stuck angle. The single aileron command
/// drives the left aileron with `+cmd` and the right with `-cmd`.
pub fn apply_actuators(
    cmd: &SurfaceCommand,
    act: &ActuatorState,
    failure: &FailureConfig,
    t: f64,
    dt: f64,
    params: &ActuatorParams,
) -> ActuatorState {
    let limit = params.max_deflection;
    let surf = (-dt / params.surface_time_constant).exp();
    let thr = (-dt / params.throttle_time_constant).exp();
    let sat = |x: f64| x.clamp(-limit, limit);

    let mut left = sat(lag(act.left_aileron, cmd.aileron, surf));
    let right = sat(lag(act.right_aileron, -cmd.aileron, surf));
    let mut elevator = sat(lag(act.elevator, cmd.elevator, surf));
    let mut rudder = sat(lag(act.rudder, cmd.rudder, surf));
    if let Some(angle) = failure.stuck_at(Surface::LeftAileron, t) {
        left = angle;
    }
    if let Some(angle) = failure.stuck_at(Surface::Elevator, t) {
        elevator = angle;
    }
    if let Some(angle) = failure.stuck_at(Surface::Rudder, t) {
        rudder = angle;
    }
    ActuatorState {
        commanded: *cmd,
        left_aileron: left,
        right_aileron: right,
        elevator,
        rudder,
        throttle: lag(act.throttle, cmd.throttle, thr).clamp(0.0, 1.0),
    }
}

/// Position and velocity in the Earth frame (z down), attitude as
/// (roll, pitch, yaw), body angular rates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AircraftState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub euler: Vector3<f64>,
    pub omega: Vector3<f64>,
}

type Packed = SVector<f64, 12>;

impl AircraftState {
    pub fn roll(&self) -> f64 {
        self.euler[0]
    }

    pub fn pitch(&self) -> f64 {
        self.euler[1]
    }

    pub fn yaw(&self) -> f64 {
        self.euler[2]
    }

    pub fn is_finite(&self) -> bool {
        self.pack().iter().all(|x| x.is_finite())
    }

    fn pack(&self) -> Packed {
        let mut x = Packed::zeros();
        x.fixed_rows_mut::<3>(0).copy_from(&self.position);
        x.fixed_rows_mut::<3>(3).copy_from(&self.velocity);
        x.fixed_rows_mut::<3>(6).copy_from(&self.euler);
        x.fixed_rows_mut::<3>(9).copy_from(&self.omega);
        x
    }

    fn unpack(x: &Packed) -> Self {
        AircraftState {
            position: x.fixed_rows::<3>(0).into(),
            velocity: x.fixed_rows::<3>(3).into(),
            euler: x.fixed_rows::<3>(6).into(),
            omega: x.fixed_rows::<3>(9).into(),
        }
    }
}

/// Body-to-Earth rotation for Z-Y-X Euler angles.
pub fn body_to_earth(euler: &Vector3<f64>) -> Matrix3<f64> {
    let (sr, cr) = euler[0].sin_cos();
    let (sp, cp) = euler[1].sin_cos();
    let (sy, cy) = euler[2].sin_cos();
    Matrix3::new(
        cp * cy,
        sr * sp * cy - cr * sy,
        cr * sp * cy + sr * sy,
        cp * sy,
        sr * sp * sy + cr * cy,
        cr * sp * sy - sr * cy,
        -sp,
        sr * cp,
        cr * cp,
    )
}

/// Time derivative of the full state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateDerivative {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub euler: Vector3<f64>,
    pub omega: Vector3<f64>,
}

/// Air-relative quantities at one state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AirData {
    pub airspeed: f64,
    pub alpha: f64,
    pub beta: f64,
}

pub fn air_data(state: &AircraftState, wind: &Vector3<f64>, alpha_limit: f64) -> AirData {
    let rot = body_to_earth(&state.euler);
    let vb = rot.transpose() * (state.velocity - wind);
    let airspeed = vb.norm();
    if airspeed < 1e-9 {
        return AirData {
            airspeed: 0.0,
            alpha: 0.0,
            beta: 0.0,
        };
    }
    AirData {
        airspeed,
        alpha: vb.z.atan2(vb.x).clamp(-alpha_limit, alpha_limit),
        beta: (vb.y / airspeed)
            .clamp(-1.0, 1.0)
            .asin()
            .clamp(-alpha_limit, alpha_limit),
    }
}

pub fn derivatives(
    state: &AircraftState,
    act: &ActuatorState,
    params: &AircraftParams,
    wind: &Vector3<f64>,
) -> StateDerivative {
    let rot = body_to_earth(&state.euler);
    let air = air_data(state, wind, params.alpha_limit);
    let v = air.airspeed;
    let a = &params.aero;
    let (p, q, r) = (state.omega.x, state.omega.y, state.omega.z);

    let mut force = Vector3::new(act.throttle * params.thrust_max, 0.0, 0.0);
    let mut moment = Vector3::zeros();
    if v > 1e-6 {
        let qs = 0.5 * params.air_density * v * v * params.wing_area;
        let span_rate = params.span / (2.0 * v);
        let chord_rate = params.chord / (2.0 * v);
        let (alpha, beta) = (air.alpha, air.beta);
        let aileron = act.aileron();

        let cl = a.cl0 + a.cl_alpha * alpha + a.cl_q * chord_rate * q + a.cl_elevator * act.elevator;
        let cd = a.cd0 + a.cd_induced * cl * cl;
        let cy = a.cy_beta * beta + a.cy_rudder * act.rudder;
        let (sa, ca) = alpha.sin_cos();
        force += qs * Vector3::new(-cd * ca + cl * sa, cy, -cd * sa - cl * ca);

        let roll = a.roll_beta * beta + span_rate * (a.roll_p * p + a.roll_r * r) + a.roll_aileron * aileron;
        let pitch = a.pitch0 + a.pitch_alpha * alpha + a.pitch_q * chord_rate * q + a.pitch_elevator * act.elevator;
        let yaw = a.yaw_beta * beta
            + span_rate * (a.yaw_p * p + a.yaw_r * r)
            + a.yaw_rudder * act.rudder
            + a.yaw_aileron * aileron;
        moment = qs * Vector3::new(params.span * roll, params.chord * pitch, params.span * yaw);
    }

    let inertia = Vector3::from(params.inertia);
    let h = state.omega.component_mul(&inertia);
    let omega_dot = (moment - state.omega.cross(&h)).component_div(&inertia);

    let velocity_dot = Vector3::new(0.0, 0.0, GRAVITY) + rot * force / params.mass;

    let (sr, cr) = state.euler[0].sin_cos();
    let (sp, cp) = state.euler[1].sin_cos();
    let tp = sp / cp;
    let euler_dot = Vector3::new(p + (q * sr + r * cr) * tp, q * cr - r * sr, (q * sr + r * cr) / cp);

    StateDerivative {
        position: state.velocity,
        velocity: velocity_dot,
        euler: euler_dot,
        omega: omega_dot,
    }
}

fn packed_derivative(x: &Packed, act: &ActuatorState, params: &AircraftParams, wind: &Vector3<f64>) -> Packed {
    let d = derivatives(&AircraftState::unpack(x), act, params, wind);
    AircraftState {
        position: d.position,
        velocity: d.velocity,
        euler: d.euler,
        omega: d.omega,
    }
    .pack()
}

fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// One RK4 step with the actuators held over the interval. `step` tags
/// faults for diagnostics.
pub fn step_dynamics(
    state: &AircraftState,
    act: &ActuatorState,
    params: &AircraftParams,
    wind: &Vector3<f64>,
    dt: f64,
    step: u64,
) -> Result<AircraftState> {
    if !(dt > 0.0 && dt <= 0.02) {
        return Err(Error::input(format!("dt must be in (0, 0.02], got {dt}")));
    }
    let x = state.pack();
    let k1 = packed_derivative(&x, act, params, wind);
    let k2 = packed_derivative(&(x + k1 * (0.5 * dt)), act, params, wind);
    let k3 = packed_derivative(&(x + k2 * (0.5 * dt)), act, params, wind);
    let k4 = packed_derivative(&(x + k3 * dt), act, params, wind);
    let slope = (k1 + k2 * 2.0 + k3 * 2.0 + k4) / 6.0;
    if slope.iter().any(|v| !v.is_finite()) {
        return Err(Error::SimulatorFault {
            step,
            detail: "non-finite state derivative".into(),
        });
    }
    let mut next = AircraftState::unpack(&(x + slope * dt));
    next.euler[2] = wrap_angle(next.euler[2]);
    if next.pitch().abs() >= PITCH_GUARD {
        return Err(Error::SimulatorFault {
            step,
            detail: format!("pitch {:.2} deg reached the Euler guard", next.pitch().to_degrees()),
        });
    }
    Ok(next)
}

/// Noiseless measurements of the full signal set used by the autopilot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Measurements {
    pub rates: RateMeasurements,
    pub position: Vector3<f64>,
    /// Horizontal (north, east) inertial velocity.
    pub ground_velocity: Vector2<f64>,
    pub velocity: Vector3<f64>,
}

/// True airspeed is the air-relative speed; indicated equals true at sea level.
pub fn read_sensors(state: &AircraftState, wind: &Vector3<f64>) -> Measurements {
    let v_true = (state.velocity - wind).norm();
    Measurements {
        rates: RateMeasurements {
            omega_m: state.omega,
            v_true,
            v_indicated: v_true,
            roll_m: state.roll(),
            pitch_m: state.pitch(),
        },
        position: state.position,
        ground_velocity: Vector2::new(state.velocity.x, state.velocity.y),
        velocity: state.velocity,
    }
}

/// Wings-level, constant-altitude equilibrium at a given airspeed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Trim {
    pub airspeed: f64,
    pub alpha: f64,
    pub elevator: f64,
    pub throttle: f64,
}

impl Trim {
    /// Trimmed state flying along `heading` from `position` (no wind).
    pub fn state(&self, position: Vector3<f64>, heading: f64) -> AircraftState {
        let euler = Vector3::new(0.0, self.alpha, heading);
        let (sy, cy) = heading.sin_cos();
        AircraftState {
            position,
            velocity: Vector3::new(self.airspeed * cy, self.airspeed * sy, 0.0),
            euler,
            omega: Vector3::zeros(),
        }
    }

    pub fn command(&self) -> SurfaceCommand {
        SurfaceCommand {
            aileron: 0.0,
            elevator: self.elevator,
            rudder: 0.0,
            throttle: self.throttle,
        }
    }
}

/// Solves the longitudinal force and moment balance for level flight by
/// Newton iteration on (alpha, elevator, throttle).
pub fn trim_level_flight(params: &AircraftParams, airspeed: f64) -> Result<Trim> {
    if !(airspeed > 0.0) {
        return Err(Error::input("trim airspeed must be positive"));
    }
    let residual = |x: &Vector3<f64>| -> Vector3<f64> {
        let trim = Trim {
            airspeed,
            alpha: x[0],
            elevator: x[1],
            throttle: x[2],
        };
        let state = trim.state(Vector3::zeros(), 0.0);
        let act = ActuatorState::settled(trim.command());
        let d = derivatives(&state, &act, params, &Vector3::zeros());
        Vector3::new(d.velocity.x, d.velocity.z, d.omega.y)
    };

    let mut x = Vector3::new(0.02, 0.0, 0.2);
    for _ in 0..50 {
        let f = residual(&x);
        if f.amax() < 1e-13 {
            break;
        }
        let mut jac = Matrix3::zeros();
        for j in 0..3 {
            let h = 1e-7;
            let mut xp = x;
            xp[j] += h;
            let mut xm = x;
            xm[j] -= h;
            jac.set_column(j, &((residual(&xp) - residual(&xm)) / (2.0 * h)));
        }
        let dx = jac
            .lu()
            .solve(&(-f))
            .ok_or_else(|| Error::Numerical("trim Jacobian is singular".into()))?;
        x += dx;
    }
    let f = residual(&x);
    if f.amax() > 1e-9 {
        return Err(Error::Numerical(format!(
            "trim did not converge (residual {:.3e})",
            f.amax()
        )));
    }
    if !(0.0..=1.0).contains(&x[2]) || x[1].abs() > params.actuators.max_deflection {
        return Err(Error::Numerical("trim lies outside actuator limits".into()));
    }
    Ok(Trim {
        airspeed,
        alpha: x[0],
        elevator: x[1],
        throttle: x[2],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> AircraftParams {
        AircraftParams::desk_uav()
    }

    #[test]
    fn bundled_params_load() {
        let p = params();
        assert_eq!(p.name, "desk-uav");
        assert!(p.validate().is_ok());
    }

    #[test]
    fn allocation_inverts_effectiveness_at_trim() {
        let p = params();
        let eff = p.control_effectiveness(p.v_trim_true);
        assert!((eff.x * p.allocation.aileron - 1.0).abs() < 1e-9);
        assert!((eff.y * p.allocation.elevator - 1.0).abs() < 1e-9);
        assert!((eff.z * p.allocation.rudder - 1.0).abs() < 1e-9);
    }

    #[test]
    fn actuator_fixed_point() {
        let p = params();
        let cmd = SurfaceCommand {
            aileron: 0.1,
            elevator: -0.05,
            rudder: 0.02,
            throttle: 0.4,
        };
        let act = ActuatorState::settled(cmd);
        let next = apply_actuators(&cmd, &act, &FailureConfig::default(), 1.0, 0.004, &p.actuators);
        assert_eq!(next, act);
    }

    #[test]
    fn actuator_first_order_step() {
        let p = ActuatorParams {
            max_deflection: 2.0,
            surface_time_constant: 0.02,
            throttle_time_constant: 0.05,
        };
        let cmd = SurfaceCommand {
            elevator: 1.0,
            ..Default::default()
        };
        let next = apply_actuators(
            &cmd,
            &ActuatorState::default(),
            &FailureConfig::default(),
            0.0,
            0.004,
            &p,
        );
        assert!((next.elevator - (1.0 - (-0.2f64).exp())).abs() < 1e-15);
        assert!((next.elevator - 0.1813).abs() < 1e-4);
    }

    #[test]
    fn actuator_saturates() {
        let p = params();
        let cmd = SurfaceCommand {
            aileron: 5.0,
            ..Default::default()
        };
        let mut act = ActuatorState::default();
        for _ in 0..1000 {
            act = apply_actuators(&cmd, &act, &FailureConfig::default(), 0.0, 0.004, &p.actuators);
        }
        assert_eq!(act.left_aileron, p.actuators.max_deflection);
        assert_eq!(act.right_aileron, -p.actuators.max_deflection);
    }

    #[test]
    fn stuck_left_aileron_holds_angle() {
        let p = params();
        let failure = FailureConfig::stuck_left_aileron(0.1, 2.0);
        let mut act = ActuatorState::default();
        for k in 0..1000 {
            let t = k as f64 * 0.004;
            let cmd = SurfaceCommand {
                aileron: 0.3 * (t * 7.0).sin(),
                ..Default::default()
            };
            act = apply_actuators(&cmd, &act, &failure, t, 0.004, &p.actuators);
            if t >= 2.0 {
                assert_eq!(act.left_aileron, 0.1);
                assert!(act.right_aileron != 0.0 || cmd.aileron == 0.0);
            }
        }
    }

    #[test]
    fn failure_validation() {
        assert!(FailureConfig::stuck_left_aileron(1.0, 0.0).validate(0.5).is_err());
        assert!(FailureConfig::stuck_left_aileron(0.05, -1.0).validate(0.5).is_err());
        assert!(FailureConfig {
            alpha_d: -0.1,
            ..Default::default()
        }
        .validate(0.5)
        .is_err());
        assert!(FailureConfig::stuck_left_aileron(0.05, 10.0).validate(0.5).is_ok());
    }

    #[test]
    fn free_fall_without_aero() {
        let mut p = params();
        p.air_density = 1e-300;
        let state = AircraftState {
            position: Vector3::zeros(),
            velocity: Vector3::new(5.0, 0.0, 0.0),
            euler: Vector3::new(0.1, 0.05, 0.3),
            omega: Vector3::new(0.0, 0.0, 0.0),
        };
        let d = derivatives(&state, &ActuatorState::default(), &p, &Vector3::zeros());
        assert!((d.velocity - Vector3::new(0.0, 0.0, GRAVITY)).norm() < 1e-12);
        assert!(d.omega.norm() < 1e-250);
    }

    #[test]
    fn sensors_report_air_relative_speed() {
        let state = AircraftState {
            position: Vector3::new(1.0, 2.0, -50.0),
            velocity: Vector3::new(20.0, 0.0, 0.0),
            euler: Vector3::zeros(),
            omega: Vector3::zeros(),
        };
        let m = read_sensors(&state, &Vector3::zeros());
        assert_eq!(m.rates.v_true, 20.0);
        assert_eq!(m.ground_velocity, Vector2::new(20.0, 0.0));
        let m = read_sensors(&state, &Vector3::new(5.0, 0.0, 0.0));
        assert_eq!(m.rates.v_true, 15.0);
        assert_eq!(m.rates.v_indicated, 15.0);
        assert_eq!(m.ground_velocity, Vector2::new(20.0, 0.0));
        let state = AircraftState {
            velocity: Vector3::new(3.0, 4.0, 0.0),
            ..state
        };
        assert_eq!(read_sensors(&state, &Vector3::zeros()).rates.v_true, 5.0);
    }

    #[test]
    fn pitch_guard_aborts() {
        let p = params();
        let state = AircraftState {
            position: Vector3::zeros(),
            velocity: Vector3::new(20.0, 0.0, 0.0),
            euler: Vector3::new(0.0, 88.99f64.to_radians(), 0.0),
            omega: Vector3::new(0.0, 5.0, 0.0),
        };
        let err = step_dynamics(&state, &ActuatorState::default(), &p, &Vector3::zeros(), 0.004, 7).unwrap_err();
        assert!(matches!(err, Error::SimulatorFault { step: 7, .. }));
    }

    #[test]
    fn rejects_bad_dt() {
        let p = params();
        let trim = trim_level_flight(&p, 20.0).unwrap();
        let s = trim.state(Vector3::zeros(), 0.0);
        let act = ActuatorState::settled(trim.command());
        assert!(step_dynamics(&s, &act, &p, &Vector3::zeros(), 0.05, 0).is_err());
        assert!(step_dynamics(&s, &act, &p, &Vector3::zeros(), 0.0, 0).is_err());
    }

    #[test]
    fn wrap_angle_range() {
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
    }
}
