//! Retrospective cost adaptive control (RCAC) for a single SISO loop.
//!
//! The controller is a linear-in-gains law `u_k = φ_k θ_k` whose regressor
//! `φ_k` stacks the previous error, its running integral, its first
//! difference and a feedforward signal. At every step the gains are
//! re-optimized by recursive least squares against the retrospective cost:
//! the past performance re-evaluated as if the candidate gains had produced
//! the past input, plus a control penalty and a regularizer around `θ_0`.
//!
//! Index alignment follows the one-step convention: the call that consumes
//! `z_k` updates `θ_k → θ_{k+1}` and returns `u_{k+1}`, which the caller
//! applies on its next tick.

pub mod oracle;

use nalgebra::{DMatrix, DVector, Matrix2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entries of `θ` or `P` beyond this magnitude are reported as divergence.
pub const DIVERGENCE_BOUND: f64 = 1e9;

/// Which entries of `[z_{k-1}, γ_{k-1}, z_{k-1} - z_{k-2}, r_k]` are active.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parameterization {
    #[serde(rename = "P")]
    P,
    #[serde(rename = "PI")]
    PI,
    #[serde(rename = "PID")]
    PID,
    #[serde(rename = "PID+FF")]
    PIDFF,
}

impl Parameterization {
    /// Number of gains, `l_θ`.
    pub fn len(self) -> usize {
        match self {
            Parameterization::P => 1,
            Parameterization::PI => 2,
            Parameterization::PID => 3,
            Parameterization::PIDFF => 4,
        }
    }

    pub fn is_empty(self) -> bool {
        false
    }
}

fn default_r_z() -> f64 {
    1.0
}

fn default_sigma() -> f64 {
    1.0
}

fn default_parameterization() -> Parameterization {
    Parameterization::PI
}

fn default_sample_time() -> f64 {
    0.004
}

/// Hyperparameters of one adaptive loop. Fixed for the loop's lifetime.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RcacHyperparams {
    /// Initial covariance scale; `P_0 = p0 · I`.
    pub p0: f64,
    /// Control weight.
    pub r_u: f64,
    /// Performance weight.
    #[serde(default = "default_r_z")]
    pub r_z: f64,
    /// Sign of the leading numerator coefficient from `u` to `z`.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Initial gains. Empty means all zeros.
    #[serde(default)]
    pub theta0: Vec<f64>,
    #[serde(default = "default_parameterization")]
    pub parameterization: Parameterization,
    /// Bound on `|γ|`; 0 disables the clamp.
    #[serde(default)]
    pub integrator_clamp: f64,
    /// Seconds per controller step; scales the integrator increment.
    #[serde(default = "default_sample_time")]
    pub sample_time: f64,
}

impl RcacHyperparams {
    /// Hyperparameters with `R_z = 1`, `σ = 1`, zero initial gains and no clamp.
    pub fn new(p0: f64, r_u: f64, parameterization: Parameterization, sample_time: f64) -> Self {
        RcacHyperparams {
            p0,
            r_u,
            r_z: 1.0,
            sigma: 1.0,
            theta0: vec![0.0; parameterization.len()],
            parameterization,
            integrator_clamp: 0.0,
            sample_time,
        }
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_theta0(mut self, theta0: Vec<f64>) -> Self {
        self.theta0 = theta0;
        self
    }

    pub fn with_integrator_clamp(mut self, clamp: f64) -> Self {
        self.integrator_clamp = clamp;
        self
    }

    pub fn l_theta(&self) -> usize {
        self.parameterization.len()
    }

    /// Checks the invariants and fills an empty `theta0` with zeros.
    pub fn validated(mut self) -> Result<Self> {
        if self.theta0.is_empty() {
            self.theta0 = vec![0.0; self.l_theta()];
        }
        if !(self.p0 > 0.0 && self.p0.is_finite()) {
            return Err(Error::input(format!("p0 must be positive, got {}", self.p0)));
        }
        if !(self.r_z > 0.0 && self.r_z.is_finite()) {
            return Err(Error::input(format!("r_z must be positive, got {}", self.r_z)));
        }
        if !(self.r_u >= 0.0 && self.r_u.is_finite()) {
            return Err(Error::input(format!("r_u must be nonnegative, got {}", self.r_u)));
        }
        if self.sigma == 0.0 || !self.sigma.is_finite() {
            return Err(Error::input("sigma must be nonzero"));
        }
        if !(self.integrator_clamp >= 0.0) {
            return Err(Error::input("integrator_clamp must be nonnegative"));
        }
        if !(self.sample_time > 0.0 && self.sample_time.is_finite()) {
            return Err(Error::input("sample_time must be positive"));
        }
        if self.theta0.len() != self.l_theta() {
            return Err(Error::input(format!(
                "theta0 has {} entries, {:?} needs {}",
                self.theta0.len(),
                self.parameterization,
                self.l_theta()
            )));
        }
        if self.theta0.iter().any(|t| !t.is_finite()) {
            return Err(Error::input("theta0 must be finite"));
        }
        Ok(self)
    }
}

/// State of one adaptive loop between calls.
///
/// On entry to the call that consumes `z_k`: `theta = θ_k`, `p_matrix = P_k`,
/// `gamma = γ_{k-1}`, `z_prev = z_{k-1}`, `z_prev2 = z_{k-2}`,
/// `phi_prev = φ_{k-1}`, `u_prev = u_{k-1}`, `phi = φ_k` and `u = u_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct RcacState {
    pub theta: DVector<f64>,
    pub p_matrix: DMatrix<f64>,
    pub gamma: f64,
    pub z_prev: f64,
    pub z_prev2: f64,
    pub phi_prev: DVector<f64>,
    pub u_prev: f64,
    pub phi: DVector<f64>,
    pub u: f64,
    pub step: u64,
}

impl RcacState {
    pub fn new(params: &RcacHyperparams) -> Self {
        let n = params.l_theta();
        RcacState {
            theta: DVector::from_column_slice(&params.theta0),
            p_matrix: DMatrix::identity(n, n) * params.p0,
            gamma: 0.0,
            z_prev: 0.0,
            z_prev2: 0.0,
            phi_prev: DVector::zeros(n),
            u_prev: 0.0,
            phi: DVector::zeros(n),
            u: 0.0,
            step: 0,
        }
    }

    /// Overwrites the gains and recomputes the pending control from them.
    pub fn force_gains(&mut self, theta: &[f64]) {
        self.theta.copy_from_slice(theta);
        self.u = dot(&self.phi, &self.theta);
    }
}

/// `a · b` accumulated from `+0.0`, so an all-zero product is `+0.0`.
pub(crate) fn dot(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc + x * y)
}

/// Stacks the active subset of `[z_{k-1}, γ_{k-1}, z_{k-1} - z_{k-2}, r_k]`
/// from the history held in `state`.
pub fn build_regressor(state: &RcacState, r_k: f64, parameterization: Parameterization) -> DVector<f64> {
    let full = [state.z_prev, state.gamma, state.z_prev - state.z_prev2, r_k];
    DVector::from_column_slice(&full[..parameterization.len()])
}

/// `ẑ_k(θ) = z_k + σ(φ_{k-1} θ - u_{k-1})`.
pub fn retrospective_performance(
    z_k: f64,
    phi_prev: &DVector<f64>,
    theta: &DVector<f64>,
    u_prev: f64,
    sigma: f64,
) -> Result<f64> {
    if phi_prev.len() != theta.len() {
        return Err(Error::contract(format!(
            "regressor length {} does not match gain length {}",
            phi_prev.len(),
            theta.len()
        )));
    }
    Ok(z_k + sigma * (dot(phi_prev, theta) - u_prev))
}

/// One covariance step, `P_{k+1}^{-1} = P_k^{-1} + Φ_kᵀ R̄ Φ_k` with
/// `Φ_k = [σ φ_{k-1}; φ_k]` and `R̄ = diag(R_z, R_u)`.
///
/// Evaluated as `P - P Ψᵀ (I + Ψ P Ψᵀ)^{-1} Ψ P` with `Ψ = R̄^{1/2} Φ_k`,
/// which never inverts `R̄` (so `R_u = 0` is fine) nor `P`.
pub fn covariance_update(
    p: &DMatrix<f64>,
    phi_k: &DVector<f64>,
    phi_prev: &DVector<f64>,
    sigma: f64,
    r_z: f64,
    r_u: f64,
) -> Result<DMatrix<f64>> {
    let n = p.nrows();
    if p.ncols() != n || phi_k.len() != n || phi_prev.len() != n {
        return Err(Error::contract("covariance and regressor dimensions disagree"));
    }
    if p.clone().cholesky().is_none() {
        return Err(Error::contract("covariance is not positive definite"));
    }
    if !(r_z > 0.0) || !(r_u >= 0.0) {
        return Err(Error::contract("weights must satisfy r_z > 0, r_u >= 0"));
    }

    let mut psi = DMatrix::zeros(2, n);
    let wz = r_z.sqrt() * sigma;
    let wu = r_u.sqrt();
    for j in 0..n {
        psi[(0, j)] = wz * phi_prev[j];
        psi[(1, j)] = wu * phi_k[j];
    }
    let p_psi_t = p * psi.transpose();
    let inner = &psi * &p_psi_t;
    let s = Matrix2::new(1.0 + inner[(0, 0)], inner[(0, 1)], inner[(1, 0)], 1.0 + inner[(1, 1)]);
    let s_inv = s
        .try_inverse()
        .ok_or_else(|| Error::Numerical("innovation matrix is singular".into()))?;
    let s_inv = DMatrix::from_column_slice(2, 2, s_inv.as_slice());
    let next = p - &p_psi_t * s_inv * p_psi_t.transpose();
    Ok((&next + next.transpose()) * 0.5)
}

/// A single adaptive loop: hyperparameters plus evolving state.
#[derive(Clone, Debug)]
pub struct RcacLoop {
    params: RcacHyperparams,
    state: RcacState,
}

impl RcacLoop {
    pub fn new(params: RcacHyperparams) -> Result<Self> {
        let params = params.validated()?;
        let state = RcacState::new(&params);
        Ok(RcacLoop { params, state })
    }

    pub fn params(&self) -> &RcacHyperparams {
        &self.params
    }

    pub fn state(&self) -> &RcacState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut RcacState {
        &mut self.state
    }

    /// The control to apply on the current tick, `u_k`.
    pub fn output(&self) -> f64 {
        self.state.u
    }

    pub fn gains(&self) -> &DVector<f64> {
        &self.state.theta
    }

    /// Consumes `z_k` (and feedforward `r_k`) and returns `u_{k+1}`.
    pub fn step(&mut self, z_k: f64, r_k: f64) -> Result<f64> {
        rcac_step(&mut self.state, z_k, r_k, &self.params)
    }
}

/// Advances `state` by one step and returns `u_{k+1} = φ_{k+1} θ_{k+1}`.
///
/// `θ_{k+1}` is the exact minimizer of the cumulative retrospective cost
/// through step `k`. On error the state is left untouched.
pub fn rcac_step(state: &mut RcacState, z_k: f64, r_k: f64, params: &RcacHyperparams) -> Result<f64> {
    if !z_k.is_finite() || !r_k.is_finite() {
        return Err(Error::input(format!(
            "non-finite RCAC input at step {} (z = {z_k}, r = {r_k})",
            state.step
        )));
    }
    let sigma = params.sigma;
    let phi_k = &state.phi;

    let p_next =
        covariance_update(&state.p_matrix, phi_k, &state.phi_prev, sigma, params.r_z, params.r_u).map_err(|e| {
            Error::Divergence {
                step: state.step,
                detail: e.to_string(),
            }
        })?;

    let z_hat = retrospective_performance(z_k, &state.phi_prev, &state.theta, state.u_prev, sigma)?;
    let control_now = dot(phi_k, &state.theta);
    let correction = &state.phi_prev * (sigma * params.r_z * z_hat) + phi_k * (params.r_u * control_now);
    let theta_next = &state.theta - &p_next * correction;

    let runaway = |v: &f64| !v.is_finite() || v.abs() > DIVERGENCE_BOUND;
    if theta_next.iter().any(runaway) || p_next.iter().any(runaway) {
        return Err(Error::Divergence {
            step: state.step,
            detail: "gain or covariance left the finite envelope".into(),
        });
    }

    let mut gamma = state.gamma + params.sample_time * state.z_prev;
    if params.integrator_clamp > 0.0 {
        gamma = gamma.clamp(-params.integrator_clamp, params.integrator_clamp);
    }

    let phi_k = std::mem::replace(&mut state.phi, DVector::zeros(0));
    state.phi_prev = phi_k;
    state.u_prev = state.u;
    state.p_matrix = p_next;
    state.theta = theta_next;
    state.gamma = gamma;
    state.z_prev2 = state.z_prev;
    state.z_prev = z_k;
    state.phi = build_regressor(state, r_k, params.parameterization);
    state.u = dot(&state.phi, &state.theta);
    state.step += 1;
    Ok(state.u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pid(ts: f64) -> RcacHyperparams {
        RcacHyperparams::new(1.0, 0.1, Parameterization::PID, ts)
    }

    #[test]
    fn regressor_starts_at_zero() {
        let params = pid(0.004);
        let state = RcacState::new(&params);
        let phi = build_regressor(&state, 0.0, params.parameterization);
        assert_eq!(phi.as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn regressor_pi_readback() {
        let params = RcacHyperparams::new(1.0, 0.1, Parameterization::PI, 0.004);
        let mut state = RcacState::new(&params);
        state.z_prev = 2.0;
        state.gamma = 0.5;
        let phi = build_regressor(&state, 9.0, params.parameterization);
        assert_eq!(phi.as_slice(), &[2.0, 0.5]);
    }

    #[test]
    fn regressor_accumulates_integrator_with_sample_time() {
        let params = pid(0.004);
        let mut state = RcacState::new(&params);
        let mut regressors = Vec::new();
        for _ in 0..3 {
            rcac_step(&mut state, 1.0, 0.0, &params).unwrap();
            regressors.push(state.phi.clone());
        }
        // γ_2 = T_s (z_0 + z_1) = 0.008, z_2 - z_1 = 0
        let third = &regressors[2];
        assert_eq!(third[0], 1.0);
        assert!((third[1] - 0.008).abs() < 1e-15);
        assert_eq!(third[2], 0.0);
    }

    #[test]
    fn retrospective_replay_is_neutral() {
        let phi = DVector::from_vec(vec![0.3, -1.2]);
        let theta = DVector::from_vec(vec![2.0, 0.5]);
        let u = dot(&phi, &theta);
        let z = retrospective_performance(0.7, &phi, &theta, u, 1.0).unwrap();
        assert_eq!(z, 0.7);
    }

    #[test]
    fn retrospective_hand_values() {
        let phi = DVector::from_vec(vec![1.0, 0.0]);
        let theta = DVector::from_vec(vec![2.0, 5.0]);
        assert_eq!(retrospective_performance(1.0, &phi, &theta, 3.0, 1.0).unwrap(), 0.0);
        assert_eq!(retrospective_performance(1.0, &phi, &theta, 3.0, -1.0).unwrap(), 2.0);
    }

    #[test]
    fn retrospective_rejects_dimension_mismatch() {
        let phi = DVector::from_vec(vec![1.0]);
        let theta = DVector::from_vec(vec![2.0, 5.0]);
        assert!(matches!(
            retrospective_performance(1.0, &phi, &theta, 3.0, 1.0),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn covariance_without_information_is_unchanged() {
        let p = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let zero = DVector::zeros(2);
        let next = covariance_update(&p, &zero, &zero, 1.0, 1.0, 0.1).unwrap();
        assert_eq!(next, p);
    }

    #[test]
    fn covariance_scalar_hand_value() {
        let p = DMatrix::from_element(1, 1, 1.0);
        let next = covariance_update(
            &p,
            &DVector::from_element(1, 0.0),
            &DVector::from_element(1, 1.0),
            1.0,
            1.0,
            1.0,
        )
        .unwrap();
        assert!((next[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn covariance_handles_zero_control_weight() {
        let p = DMatrix::identity(2, 2);
        let phi = DVector::from_vec(vec![1.0, 2.0]);
        let next = covariance_update(&p, &phi, &phi, -1.0, 1.0, 0.0).unwrap();
        // information form: I + φᵀφ
        let info = DMatrix::identity(2, 2) + &phi * phi.transpose();
        let expected = info.try_inverse().unwrap();
        assert!((next - expected).abs().max() < 1e-14);
    }

    #[test]
    fn covariance_rejects_indefinite_input() {
        let p = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let phi = DVector::from_vec(vec![1.0, 0.0]);
        assert!(matches!(
            covariance_update(&p, &phi, &phi, 1.0, 1.0, 0.0),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn zero_fixed_point() {
        let params = pid(0.004);
        let mut state = RcacState::new(&params);
        for _ in 0..500 {
            let u = rcac_step(&mut state, 0.0, 0.0, &params).unwrap();
            assert_eq!(u, 0.0);
        }
        assert!(state.theta.iter().all(|t| *t == 0.0));
        assert_eq!(state.p_matrix, DMatrix::identity(3, 3));
    }

    #[test]
    fn non_finite_input_is_rejected_without_mutation() {
        let params = pid(0.004);
        let mut state = RcacState::new(&params);
        rcac_step(&mut state, 0.2, 0.0, &params).unwrap();
        let before = state.clone();
        assert!(matches!(
            rcac_step(&mut state, f64::NAN, 0.0, &params),
            Err(Error::InvalidInput(_))
        ));
        assert!(rcac_step(&mut state, 0.0, f64::INFINITY, &params).is_err());
        assert_eq!(state, before);
    }

    #[test]
    fn runaway_gains_report_divergence_with_step() {
        let params = RcacHyperparams::new(1e8, 0.0, Parameterization::P, 0.004);
        let mut state = RcacState::new(&params);
        let mut result = Ok(0.0);
        for _ in 0..50 {
            result = rcac_step(&mut state, 1e6, 0.0, &params);
            if result.is_err() {
                break;
            }
        }
        match result {
            Err(Error::Divergence { step, .. }) => assert!(step >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn integrator_respects_clamp() {
        let params = pid(0.1).with_integrator_clamp(0.25);
        let mut state = RcacState::new(&params);
        for _ in 0..100 {
            rcac_step(&mut state, 3.0, 0.0, &params).unwrap();
            assert!(state.gamma.abs() <= 0.25);
        }
        assert_eq!(state.gamma, 0.25);
    }

    #[test]
    fn hyperparams_validation() {
        let ok = RcacHyperparams::new(1.0, 0.0, Parameterization::PI, 0.004);
        assert!(ok.clone().validated().is_ok());
        assert!(RcacHyperparams { p0: 0.0, ..ok.clone() }.validated().is_err());
        assert!(RcacHyperparams { r_z: 0.0, ..ok.clone() }.validated().is_err());
        assert!(RcacHyperparams {
            r_u: -1.0,
            ..ok.clone()
        }
        .validated()
        .is_err());
        assert!(RcacHyperparams {
            sigma: 0.0,
            ..ok.clone()
        }
        .validated()
        .is_err());
        assert!(RcacHyperparams {
            theta0: vec![1.0; 3],
            ..ok.clone()
        }
        .validated()
        .is_err());
        let filled = RcacHyperparams { theta0: vec![], ..ok }.validated().unwrap();
        assert_eq!(filled.theta0, vec![0.0, 0.0]);
    }

    #[test]
    fn table_row_roll_outer_loop_params() {
        let params = RcacHyperparams::new(1.0, 0.001, Parameterization::PI, 0.004);
        let mut lp = RcacLoop::new(params).unwrap();
        assert_eq!(lp.state().p_matrix, DMatrix::identity(2, 2));
        for k in 0..100 {
            lp.step(0.1 * ((k as f64) * 0.1).sin(), 0.0).unwrap();
        }
        assert!(lp.gains().iter().all(|t| t.is_finite()));
    }
}
