//! Smoothed contact force law: penalty normal force with velocity damping and
//! regularized Coulomb friction.
//!
//! Every piece is smooth in positions, velocities and parameters, so contact
//! forces carry forward-mode sensitivities through entire rollouts. Strict
//! complementarity is approximated; [`complementarity_residual`] measures how
//! far a contact set is from it.

use crate::error::{Result, SimError};
use crate::linalg::V3;
use crate::mech::{contact_kinematics, Params, ParamVector, SimState, SystemModel};
use crate::sensitivity::{cst, Scalar};
use serde::{Deserialize, Serialize};

/// Smoothing scale for the damping factor's clamp to nonnegative values.
const DAMP_SMOOTHING: f64 = 0.1;

/// Multiple of the distance smoothing length below which a contact point is
/// flagged active (sensor rows outside the band read zero force).
const ACTIVATION_BAND_FACTOR: f64 = 10.0;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactConfig {
    /// Normal stiffness, N/m.
    pub k_n: f64,
    /// Normal damping coefficient, s/m.
    pub c_n: f64,
    /// Distance smoothing length, m.
    pub eps_phi: f64,
    /// Coulomb friction coefficient.
    pub mu: f64,
    /// Tangential velocity smoothing, m/s.
    pub eps_v: f64,
}

impl Default for ContactConfig {
    fn default() -> Self {
        ContactConfig {
            k_n: 1e4,
            c_n: 0.5,
            eps_phi: 1e-3,
            mu: 0.6,
            eps_v: 1e-2,
        }
    }
}

impl ContactConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("k_n", self.k_n),
            ("c_n", self.c_n),
            ("eps_phi", self.eps_phi),
            ("mu", self.mu),
            ("eps_v", self.eps_v),
        ];
        for (name, v) in fields {
            if !(v > 0.0) {
                return Err(SimError::Config(format!(
                    "contact parameter {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn activation_band(&self) -> f64 {
        ACTIVATION_BAND_FACTOR * self.eps_phi
    }
}

/// Forces at one contact point.
#[derive(Clone, Copy, Debug)]
pub struct PointContact<S: Scalar> {
    /// Normal force, N (nonnegative by construction).
    pub normal: S,
    /// Tangential force, N.
    pub tangential: S,
    /// Signed distance at force evaluation, m.
    pub dist: S,
    pub active: bool,
}

/// Plain-float contact forces for one timestep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactSet {
    pub points: Vec<ContactPoint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactPoint {
    pub normal: f64,
    pub tangential: f64,
    pub dist: f64,
    pub active: bool,
}

impl ContactSet {
    pub fn from_generic<S: Scalar>(points: &[PointContact<S>]) -> Self {
        ContactSet {
            points: points
                .iter()
                .map(|p| ContactPoint {
                    normal: p.normal.value(),
                    tangential: p.tangential.value(),
                    dist: p.dist.value(),
                    active: p.active,
                })
                .collect(),
        }
    }

    pub fn max_normal(&self) -> f64 {
        self.points.iter().map(|p| p.normal).fold(0.0, f64::max)
    }

    pub fn any_active(&self) -> bool {
        self.points.iter().any(|p| p.active)
    }
}

/// Smoothed contact force at one point given its signed distance and the
/// tangential/normal velocity of the point.
pub fn point_force<S: Scalar>(dist: S, v_t: S, v_n: S, cfg: &ContactConfig) -> (S, S) {
    let eps_phi: S = cst(cfg.eps_phi);
    let base = cst::<S>(cfg.k_n) * eps_phi * (-dist / eps_phi).softplus();
    // smooth clamp of (1 - c_n v_n) to nonnegative values: no adhesion
    let eps_d: S = cst(DAMP_SMOOTHING);
    let damp = eps_d * ((S::one() - cst::<S>(cfg.c_n) * v_n) / eps_d).softplus();
    let normal = base * damp;
    let tangential = -cst::<S>(cfg.mu) * normal * (v_t / cst(cfg.eps_v)).tanh();
    (normal, tangential)
}

/// Contact forces at every contact point of the system, smooth in
/// `(q, qdot, theta)`.
pub fn solve_contact_generic<S: Scalar>(
    q: &V3<S>,
    qdot: &V3<S>,
    p: &Params<S>,
    sys: &SystemModel,
    cfg: &ContactConfig,
) -> Vec<PointContact<S>> {
    let band = cfg.activation_band();
    contact_kinematics(q, p, sys)
        .iter()
        .map(|k| {
            let v_t = k.jac[0][0] * qdot[0] + k.jac[0][1] * qdot[1] + k.jac[0][2] * qdot[2];
            let v_n = k.jac[1][0] * qdot[0] + k.jac[1][1] * qdot[1] + k.jac[1][2] * qdot[2];
            let (normal, tangential) = point_force(k.dist, v_t, v_n, cfg);
            PointContact {
                normal,
                tangential,
                dist: k.dist,
                active: k.dist.value() < band,
            }
        })
        .collect()
}

/// Plain-float contact solve.
pub fn solve_contact(
    x: &crate::mech::State,
    theta: &ParamVector,
    sys: &SystemModel,
    cfg: &ContactConfig,
) -> Result<ContactSet> {
    let p: Params<f64> = Params::constant(theta, sys.kind)?;
    let s = SimState::<f64>::lift(x);
    Ok(ContactSet::from_generic(&solve_contact_generic(
        &s.q, &s.qdot, &p, sys, cfg,
    )))
}

/// Max over points of `lambda_n * max(phi, 0)`: distance from strict
/// complementarity.
pub fn complementarity_residual(contacts: &ContactSet, distances: &[f64]) -> Result<f64> {
    if contacts.points.len() != distances.len() {
        return Err(SimError::Config(format!(
            "{} contact points but {} distances",
            contacts.points.len(),
            distances.len()
        )));
    }
    Ok(contacts
        .points
        .iter()
        .zip(distances)
        .map(|(p, &phi)| p.normal * phi.max(0.0))
        .fold(0.0, f64::max))
}
