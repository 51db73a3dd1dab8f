#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;
use rcac_autopilot::nalgebra::{DMatrix, DVector, SymmetricEigen};
use rcac_autopilot::rcac::oracle::{batch_argmin_oracle, RcacHistory};
use rcac_autopilot::{rcac_step, Parameterization, RcacHyperparams, RcacState, ScenarioConfig};

pub const PARAMETERIZATIONS: [Parameterization; 4] = [
    Parameterization::P,
    Parameterization::PI,
    Parameterization::PID,
    Parameterization::PIDFF,
];

/// One SISO input sequence for the adaptive update.
#[derive(Clone, Debug)]
pub struct Sequence {
    pub params: RcacHyperparams,
    pub z: Vec<f64>,
    pub r: Vec<f64>,
}

pub fn random_sequence<R: Rng>(rng: &mut R, len: usize) -> Sequence {
    let parameterization = PARAMETERIZATIONS[rng.gen_range(0..4)];
    let sigma = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let r_u = [0.0, 0.001, 0.1][rng.gen_range(0..3)];
    let p0 = 10f64.powf(rng.gen_range(-2.0..2.0));
    let n = parameterization.len();
    let theta0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let ts = [0.004, 0.02, 0.1][rng.gen_range(0..3)];
    let params = RcacHyperparams::new(p0, r_u, parameterization, ts)
        .with_sigma(sigma)
        .with_theta0(theta0);
    let z = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let r = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Sequence { params, z, r }
}

/// Worst-case figures over one sequence.
#[derive(Clone, Debug, Default)]
pub struct SequenceCheck {
    /// `‖θ - θ*‖ / max(1, ‖θ*‖)`.
    pub theta_rel_err: f64,
    /// Largest `|P - Pᵀ|` entry.
    pub asymmetry: f64,
    /// Every `P_k` admitted a Cholesky factor.
    pub positive_definite: bool,
    /// Smallest `λ_min(P_k - P_{k+1}) / max(1, ‖P_k‖₂)`.
    pub monotone_margin: f64,
    /// Largest relative residual of `P_{k+1}^{-1} = P_k^{-1} + ΦᵀR̄Φ`, or
    /// `None` when `R_u = 0`.
    pub information_rel_err: Option<f64>,
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.amax()
}

pub fn check_sequence(seq: &Sequence) -> SequenceCheck {
    let params = &seq.params;
    let mut state = RcacState::new(params);
    let mut history = RcacHistory::new();
    let mut out = SequenceCheck {
        positive_definite: true,
        monotone_margin: f64::INFINITY,
        information_rel_err: (params.r_u > 0.0).then_some(0.0),
        ..Default::default()
    };
    for (z, r) in seq.z.iter().zip(&seq.r) {
        let p_before = state.p_matrix.clone();
        let phi_k = state.phi.clone();
        let phi_prev = state.phi_prev.clone();
        history.record(&state, *z);
        rcac_step(&mut state, *z, *r, params).expect("step succeeds");

        let theta_star = batch_argmin_oracle(&history, params).expect("oracle solves");
        let err = (&state.theta - &theta_star).norm() / theta_star.norm().max(1.0);
        out.theta_rel_err = out.theta_rel_err.max(err);

        let p = &state.p_matrix;
        out.asymmetry = out.asymmetry.max((p - p.transpose()).amax());
        out.positive_definite &= p.clone().cholesky().is_some();

        let drop = &p_before - p;
        let lambda_min = SymmetricEigen::new((&drop + drop.transpose()) * 0.5).eigenvalues.min();
        out.monotone_margin = out.monotone_margin.min(lambda_min / spectral_norm(&p_before).max(1.0));

        if let Some(worst) = out.information_rel_err.as_mut() {
            let n = phi_k.len();
            let mut phi_stack = DMatrix::zeros(2, n);
            phi_stack.set_row(0, &(phi_prev.transpose() * params.sigma));
            phi_stack.set_row(1, &phi_k.transpose());
            let r_bar = DMatrix::from_diagonal(&DVector::from_column_slice(&[params.r_z, params.r_u]));
            let expected = p_before.clone().try_inverse().unwrap() + phi_stack.transpose() * r_bar * &phi_stack;
            let actual = p.clone().try_inverse().unwrap();
            let rel = (&actual - &expected).norm() / actual.norm();
            *worst = worst.max(rel);
        }
    }
    out
}

pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn scenario(file: &str) -> ScenarioConfig {
    let path = workspace_root().join("configs/scenarios").join(file);
    ScenarioConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn csv_bytes(log: &rcac_autopilot::FlightLog) -> Vec<u8> {
    let mut buf = Vec::new();
    log.write_csv(&mut buf).expect("in-memory CSV");
    buf
}
