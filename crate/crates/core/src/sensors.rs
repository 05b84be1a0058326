//! Measurement maps, Gaussian likelihood, score, and synthetic readings.
//!
//! Two sensor models are supported:
//! - a contact-force sensor that reconstructs contact forces from the inverse
//!   dynamics residual through a damped least-squares pull-back,
//! - an accelerometer reporting the sensor-point acceleration implied by the
//!   current forces.
//!
//! Both are smooth in state, control, contact forces and parameters, so the
//! score (gradient of the log-likelihood in the tagged parameters) falls out
//! of a forward-mode evaluation along a rollout.

use crate::contact::{ContactConfig, PointContact};
use crate::error::{Result, SimError};
use crate::linalg::{chol_solve_spd, m3_vec, solve3_spd, v3_sub, V3};
use crate::mech::{
    bias, contact_kinematics, mass_matrix, sensor_jacobian, Params, RolloutData, SimState,
    SystemModel,
};
use crate::sensitivity::{cst, Dual, Scalar};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Damping added to `Jc Jc^T` in the contact-force pull-back.
const FORCE_SENSOR_DAMPING: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SensorKind {
    #[serde(rename = "contact-force")]
    ContactForce,
    #[serde(rename = "accelerometer")]
    Accelerometer,
}

impl SensorKind {
    pub fn measurement_dim(&self, sys: &SystemModel) -> usize {
        match self {
            SensorKind::ContactForce => 2 * sys.kind.contact_count(),
            SensorKind::Accelerometer => 2,
        }
    }
}

/// Gaussian measurement model with diagonal covariance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasurementModel {
    pub kind: SensorKind,
    /// Per-component noise variances (diagonal of Sigma), units^2.
    variances: Vec<f64>,
}

impl MeasurementModel {
    pub fn new(kind: SensorKind, variances: Vec<f64>) -> Result<Self> {
        if variances.is_empty() {
            return Err(SimError::Config("measurement model needs at least one component".into()));
        }
        if variances.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(SimError::Config(
                "measurement covariance must be positive definite (all variances > 0)".into(),
            ));
        }
        Ok(MeasurementModel { kind, variances })
    }

    /// Same noise standard deviation on every component.
    pub fn isotropic(kind: SensorKind, sigma: f64, sys: &SystemModel) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(SimError::Config(format!(
                "sensor noise sigma must be positive, got {sigma}"
            )));
        }
        Self::new(kind, vec![sigma * sigma; kind.measurement_dim(sys)])
    }

    pub fn dim(&self) -> usize {
        self.variances.len()
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    /// Model with covariance scaled by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.kind, self.variances.iter().map(|v| v * c).collect())
    }
}

/// One sensor reading at a timestep index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorReading {
    pub y: Vec<f64>,
    pub index: usize,
}

/// Contact-force sensor: damped least-squares contact force consistent with
/// the inverse-dynamics residual `M qdd_est + b - u`, rows restricted to
/// active contacts. With no active contact the reading is a valid zero-force
/// measurement.
pub fn contact_force_sensor<S: Scalar>(
    x: &SimState<S>,
    u: &V3<S>,
    qdd_est: &V3<S>,
    p: &Params<S>,
    sys: &SystemModel,
    contact_cfg: &ContactConfig,
) -> Vec<S> {
    let kin = contact_kinematics(&x.q, p, sys);
    let band = contact_cfg.activation_band();
    let active: Vec<usize> = (0..kin.len())
        .filter(|&i| kin[i].dist.value() < band)
        .collect();
    let mut out = vec![S::zero(); 2 * kin.len()];
    if active.is_empty() {
        return out;
    }
    let m = mass_matrix(&x.q, p, sys);
    let b = bias(&x.q, &x.qdot, p, sys);
    let mqdd = m3_vec(&m, qdd_est);
    let residual = [
        mqdd[0] + b[0] - u[0],
        mqdd[1] + b[1] - u[1],
        mqdd[2] + b[2] - u[2],
    ];
    // stacked active rows of Jc: (tangential, normal) per active point
    let rows: Vec<[S; 3]> = active
        .iter()
        .flat_map(|&i| [kin[i].jac[0], kin[i].jac[1]])
        .collect();
    let n = rows.len();
    // normal equations (Ja Ja^T + rho I) f = Ja r
    let mut gram = vec![S::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            let mut s = S::zero();
            for k in 0..3 {
                s = s + rows[i][k] * rows[j][k];
            }
            if i == j {
                s = s + cst(FORCE_SENSOR_DAMPING);
            }
            gram[i * n + j] = s;
        }
    }
    let mut rhs: Vec<S> = rows
        .iter()
        .map(|r| r[0] * residual[0] + r[1] * residual[1] + r[2] * residual[2])
        .collect();
    chol_solve_spd(n, &mut gram, &mut rhs);
    for (slot, &i) in active.iter().enumerate() {
        out[2 * i] = rhs[2 * slot];
        out[2 * i + 1] = rhs[2 * slot + 1];
    }
    out
}

/// Accelerometer: `Jdot_g qdot + J_g M^-1 (Jc^T lambda - b + u)`.
pub fn accelerometer<S: Scalar>(
    x: &SimState<S>,
    u: &V3<S>,
    lam: &[PointContact<S>],
    p: &Params<S>,
    sys: &SystemModel,
) -> Vec<S> {
    let (jg, jg_dot) = sensor_jacobian(&x.q, &x.qdot, p, sys);
    let kin = contact_kinematics(&x.q, p, sys);
    let mut f_c = [S::zero(); 3];
    for (pt, k) in lam.iter().zip(kin.iter()) {
        for j in 0..3 {
            f_c[j] = f_c[j] + k.jac[0][j] * pt.tangential + k.jac[1][j] * pt.normal;
        }
    }
    let m = mass_matrix(&x.q, p, sys);
    let b = bias(&x.q, &x.qdot, p, sys);
    let rhs = [f_c[0] - b[0] + u[0], f_c[1] - b[1] + u[1], f_c[2] - b[2] + u[2]];
    let qdd = solve3_spd(&m, &rhs);
    (0..2)
        .map(|r| {
            let mut s = S::zero();
            for j in 0..3 {
                s = s + jg_dot[r][j] * x.qdot[j] + jg[r][j] * qdd[j];
            }
            s
        })
        .collect()
}

/// Mean measurement at step `i` of a rollout. The contact-force sensor's
/// acceleration estimate is the backward difference of velocities across the
/// step, per the numeric-approximation convention; the accelerometer uses the
/// step's contact forces directly.
pub fn measurement_generic<S: Scalar>(
    model: &MeasurementModel,
    data: &RolloutData<S>,
    controls: &[V3<S>],
    i: usize,
    p: &Params<S>,
    sys: &SystemModel,
    contact_cfg: &ContactConfig,
) -> Vec<S> {
    let x = &data.states[i];
    let u = &controls[i];
    match model.kind {
        SensorKind::ContactForce => {
            let inv_dt: S = cst(1.0 / sys.dt);
            let dv = v3_sub(&data.states[i + 1].qdot, &x.qdot);
            let qdd_est = [dv[0] * inv_dt, dv[1] * inv_dt, dv[2] * inv_dt];
            contact_force_sensor(x, u, &qdd_est, p, sys, contact_cfg)
        }
        SensorKind::Accelerometer => accelerometer(x, u, &data.contacts[i], p, sys),
    }
}

/// All mean measurements of a rollout (one per control step).
pub fn measurement_sequence_generic<S: Scalar>(
    model: &MeasurementModel,
    data: &RolloutData<S>,
    controls: &[V3<S>],
    p: &Params<S>,
    sys: &SystemModel,
    contact_cfg: &ContactConfig,
) -> Vec<Vec<S>> {
    (0..controls.len())
        .map(|i| measurement_generic(model, data, controls, i, p, sys, contact_cfg))
        .collect()
}

/// Mean measurements of a stored trajectory replayed at plain floats under
/// `theta` (from its initial state and controls).
pub fn trajectory_means(
    traj: &crate::mech::Trajectory,
    theta: &crate::mech::ParamVector,
    model: &MeasurementModel,
    sys: &SystemModel,
    contact_cfg: &ContactConfig,
) -> Result<Vec<Vec<f64>>> {
    let p: Params<f64> = Params::constant(theta, sys.kind)?;
    let x0 = SimState::<f64>::lift(traj.initial_state());
    let controls: Vec<V3<f64>> = traj.controls.clone();
    let data = crate::mech::rollout_generic(&x0, &controls, &p, sys, contact_cfg)?;
    Ok(measurement_sequence_generic(
        model, &data, &controls, &p, sys, contact_cfg,
    ))
}

/// Gaussian log-density of `ybar` around mean `g`.
pub fn log_likelihood(ybar: &SensorReading, g: &[f64], model: &MeasurementModel) -> Result<f64> {
    if ybar.y.len() != model.dim() || g.len() != model.dim() {
        return Err(SimError::Config(format!(
            "measurement dimension mismatch: reading {}, mean {}, model {}",
            ybar.y.len(),
            g.len(),
            model.dim()
        )));
    }
    Ok(log_likelihood_generic(&ybar.y, g, model).value())
}

/// Generic-log-density; the mean may carry sensitivities.
pub fn log_likelihood_generic<S: Scalar>(y: &[f64], g: &[S], model: &MeasurementModel) -> S {
    let mut ll = S::zero();
    for ((yv, gv), var) in y.iter().zip(g).zip(model.variances()) {
        let r = cst::<S>(*yv) - *gv;
        ll = ll - cst::<S>(0.5 / var) * r * r;
    }
    let log_norm: f64 = model
        .variances()
        .iter()
        .map(|v| 0.5 * (2.0 * std::f64::consts::PI * v).ln())
        .sum();
    ll - cst(log_norm)
}

/// Score `xi = (dg/dtheta)^T Sigma^-1 (ybar - g)` from a dual-valued mean.
pub fn score_from_dual<const D: usize>(
    y: &[f64],
    g: &[Dual<f64, D>],
    model: &MeasurementModel,
) -> Result<Vec<f64>> {
    if y.len() != model.dim() || g.len() != model.dim() {
        return Err(SimError::Config("score dimension mismatch".into()));
    }
    let mut xi = vec![0.0; D];
    for ((yv, gv), var) in y.iter().zip(g).zip(model.variances()) {
        let w = (yv - gv.re) / var;
        for (x, p) in xi.iter_mut().zip(gv.im.iter()) {
            *x += w * p;
        }
    }
    Ok(xi)
}

/// Draw a noisy reading around the mean; deterministic given the rng state.
pub fn simulate_measurement<R: Rng>(
    g: &[f64],
    model: &MeasurementModel,
    index: usize,
    rng: &mut R,
) -> Result<SensorReading> {
    if g.len() != model.dim() {
        return Err(SimError::Config("measurement dimension mismatch".into()));
    }
    let y = g
        .iter()
        .zip(model.variances())
        .map(|(gv, var)| {
            let z: f64 = rng.sample(StandardNormal);
            gv + var.sqrt() * z
        })
        .collect();
    Ok(SensorReading { y, index })
}
