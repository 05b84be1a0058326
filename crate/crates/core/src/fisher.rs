//! Empirical and predicted Fisher information over trajectories.
//!
//! The empirical matrix accumulates outer products of realized scores; the
//! predicted matrix is the exact Gaussian information `sum G^T Sigma^-1 G`
//! with total measurement sensitivities `G = dg/dtheta` obtained by replaying
//! the trajectory with tagged parameters. Planning uses the predicted form
//! (no data exists yet); reporting uses the empirical form.

use crate::contact::ContactConfig;
use crate::error::{Result, SimError};
use crate::linalg::V3;
use crate::mech::{
    rollout_generic, tagged_params, ParamVector, SimState, SystemKind, SystemModel, Trajectory,
};
use crate::sensitivity::{cst, Dual};
use crate::sensors::{measurement_sequence_generic, score_from_dual, MeasurementModel};

/// Symmetric positive-semidefinite d x d information matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct FisherMatrix {
    dim: usize,
    /// Row-major d*d entries.
    data: Vec<f64>,
}

impl FisherMatrix {
    pub fn zero(dim: usize) -> Self {
        FisherMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn add_outer(&mut self, v: &[f64], weight: f64) {
        debug_assert_eq!(v.len(), self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.data[i * self.dim + j] += weight * v[i] * v[j];
            }
        }
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.data {
            *v *= c;
        }
    }

    /// Row-major entries.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Smallest eigenvalue via cyclic Jacobi sweeps (d <= 8, diagnostics only).
    pub fn min_eigenvalue(&self) -> f64 {
        let n = self.dim;
        let mut a = self.data.clone();
        for _ in 0..50 {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a[p * n + q].abs();
                }
            }
            if off < 1e-14 * (1.0 + self.trace().abs()) {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    if apq.abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                }
            }
        }
        (0..n).map(|i| a[i * n + i]).fold(f64::INFINITY, f64::min)
    }
}

/// `sum_i xi_i xi_i^T` over realized scores. Empty input is the zero matrix
/// only when a dimension is supplied via the first score; callers with no
/// scores should use [`FisherMatrix::zero`].
pub fn empirical_fim(scores: &[Vec<f64>]) -> Result<FisherMatrix> {
    let Some(first) = scores.first() else {
        return Ok(FisherMatrix::zero(0));
    };
    let d = first.len();
    let mut fim = FisherMatrix::zero(d);
    for xi in scores {
        if xi.len() != d {
            return Err(SimError::Config("score dimension mismatch".into()));
        }
        fim.add_outer(xi, 1.0);
    }
    Ok(fim)
}

/// Sum of the diagonal: the trajectory-design objective.
pub fn trace_objective(fim: &FisherMatrix) -> f64 {
    fim.trace()
}

/// Entrywise sum; preserves positive semidefiniteness.
pub fn accumulate(prev: &FisherMatrix, new: &FisherMatrix) -> Result<FisherMatrix> {
    if prev.dim != new.dim {
        return Err(SimError::Config(format!(
            "cannot accumulate Fisher matrices of dims {} and {}",
            prev.dim, new.dim
        )));
    }
    let mut out = prev.clone();
    for (o, v) in out.data.iter_mut().zip(&new.data) {
        *o += v;
    }
    Ok(out)
}

/// Predicted information from measurement Jacobian rows (each of length d)
/// with matching per-row noise variances.
pub fn predicted_fim_from_jacobians(rows: &[Vec<f64>], variances: &[f64]) -> Result<FisherMatrix> {
    if rows.len() != variances.len() {
        return Err(SimError::Config("jacobian rows / variances length mismatch".into()));
    }
    let Some(first) = rows.first() else {
        return Ok(FisherMatrix::zero(0));
    };
    let d = first.len();
    let mut fim = FisherMatrix::zero(d);
    for (row, var) in rows.iter().zip(variances) {
        if row.len() != d {
            return Err(SimError::Config("jacobian row dimension mismatch".into()));
        }
        fim.add_outer(row, 1.0 / var);
    }
    Ok(fim)
}

fn predicted_fim_impl<const D: usize>(
    traj: &Trajectory,
    theta: &ParamVector,
    model: &MeasurementModel,
    sys: &SystemModel,
    cfg: &ContactConfig,
) -> Result<FisherMatrix> {
    let p = tagged_params::<D>(theta, sys.kind)?;
    let x0 = SimState::<Dual<f64, D>>::lift(traj.initial_state());
    let controls: Vec<V3<Dual<f64, D>>> = traj
        .controls
        .iter()
        .map(|u| [cst(u[0]), cst(u[1]), cst(u[2])])
        .collect();
    let data = rollout_generic(&x0, &controls, &p, sys, cfg)?;
    let means = measurement_sequence_generic(model, &data, &controls, &p, sys, cfg);
    let mut fim = FisherMatrix::zero(D);
    for g in &means {
        for (gv, var) in g.iter().zip(model.variances()) {
            let row: Vec<f64> = gv.im.to_vec();
            fim.add_outer(&row, 1.0 / var);
        }
    }
    Ok(fim)
}

/// Exact Gaussian FIM of a trajectory replayed under `theta`.
pub fn predicted_fim(
    traj: &Trajectory,
    theta: &ParamVector,
    model: &MeasurementModel,
    sys: &SystemModel,
    cfg: &ContactConfig,
) -> Result<FisherMatrix> {
    match sys.kind {
        SystemKind::ThreeLinkArm => predicted_fim_impl::<6>(traj, theta, model, sys, cfg),
        SystemKind::PlanarBlock => predicted_fim_impl::<3>(traj, theta, model, sys, cfg),
    }
}

fn trajectory_scores_impl<const D: usize>(
    traj: &Trajectory,
    readings: &[Vec<f64>],
    theta: &ParamVector,
    model: &MeasurementModel,
    sys: &SystemModel,
    cfg: &ContactConfig,
) -> Result<Vec<Vec<f64>>> {
    if readings.len() != traj.horizon() {
        return Err(SimError::Config(format!(
            "{} readings for horizon {}",
            readings.len(),
            traj.horizon()
        )));
    }
    let p = tagged_params::<D>(theta, sys.kind)?;
    let x0 = SimState::<Dual<f64, D>>::lift(traj.initial_state());
    let controls: Vec<V3<Dual<f64, D>>> = traj
        .controls
        .iter()
        .map(|u| [cst(u[0]), cst(u[1]), cst(u[2])])
        .collect();
    let data = rollout_generic(&x0, &controls, &p, sys, cfg)?;
    let means = measurement_sequence_generic(model, &data, &controls, &p, sys, cfg);
    means
        .iter()
        .zip(readings)
        .map(|(g, y)| score_from_dual(y, g, model))
        .collect()
}

/// Per-step scores of realized readings along a trajectory, with total
/// parameter sensitivities through the replayed rollout.
pub fn trajectory_scores(
    traj: &Trajectory,
    readings: &[Vec<f64>],
    theta: &ParamVector,
    model: &MeasurementModel,
    sys: &SystemModel,
    cfg: &ContactConfig,
) -> Result<Vec<Vec<f64>>> {
    match sys.kind {
        SystemKind::ThreeLinkArm => {
            trajectory_scores_impl::<6>(traj, readings, theta, model, sys, cfg)
        }
        SystemKind::PlanarBlock => {
            trajectory_scores_impl::<3>(traj, readings, theta, model, sys, cfg)
        }
    }
}
