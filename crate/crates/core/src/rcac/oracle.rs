//! Batch minimizer of the retrospective cost, used to check the recursive
//! update. Not part of any control path.

use nalgebra::{DMatrix, DVector};

use super::{RcacHyperparams, RcacState};
use crate::error::{Error, Result};

/// Recorded `(z_i, φ_i, u_i)` for steps `0..=k`.
#[derive(Clone, Debug, Default)]
pub struct RcacHistory {
    pub z: Vec<f64>,
    pub phi: Vec<DVector<f64>>,
    pub u: Vec<f64>,
}

impl RcacHistory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records the step about to consume `z_k`, taking `φ_k` and `u_k` from
    /// the state before the update.
    pub fn record(&mut self, state: &RcacState, z_k: f64) {
        self.z.push(z_k);
        self.phi.push(state.phi.clone());
        self.u.push(state.u);
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }
}

/// Minimizes
/// `Σ_i R_z ẑ_i(θ)² + Σ_i R_u (φ_i θ)² + (θ - θ_0)ᵀ P_0^{-1} (θ - θ_0)`
/// over the whole history by solving its normal equations with a Cholesky
/// factorization. With an empty history this is `θ_0`.
pub fn batch_argmin_oracle(history: &RcacHistory, params: &RcacHyperparams) -> Result<DVector<f64>> {
    let params = params.clone().validated()?;
    let n = params.l_theta();
    if history.phi.len() != history.z.len() || history.u.len() != history.z.len() {
        return Err(Error::contract("history sequences differ in length"));
    }
    if history.phi.iter().any(|p| p.len() != n) {
        return Err(Error::contract(
            "history regressor length does not match parameterization",
        ));
    }

    let theta0 = DVector::from_column_slice(&params.theta0);
    let p0_inv = 1.0 / params.p0;
    let mut normal = DMatrix::identity(n, n) * p0_inv;
    let mut rhs = &theta0 * p0_inv;

    let sigma = params.sigma;
    let zero = DVector::zeros(n);
    for i in 0..history.len() {
        let (phi_before, u_before) = if i == 0 {
            (&zero, 0.0)
        } else {
            (&history.phi[i - 1], history.u[i - 1])
        };
        let phi_i = &history.phi[i];
        normal += phi_before * phi_before.transpose() * (sigma * sigma * params.r_z);
        normal += phi_i * phi_i.transpose() * params.r_u;
        rhs += phi_before * (sigma * params.r_z * (sigma * u_before - history.z[i]));
    }

    let chol = normal
        .cholesky()
        .ok_or_else(|| Error::Numerical("batch normal matrix is not positive definite".into()))?;
    Ok(chol.solve(&rhs))
}
