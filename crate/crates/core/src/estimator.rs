//! Maximum-likelihood parameter estimation over collected experiments.
//!
//! States and contact forces are not free unknowns: each experiment is
//! re-simulated under the candidate parameters, which pins them through the
//! deterministic dynamics and contact law (single-shooting likelihood). The
//! fit is projected adaptive-moment descent on the negative log-likelihood
//! inside the feasible parameter box, rescaled to unit coordinates.
//!
//! Contact timing makes the likelihood surface multimodal, so a single local
//! fit is unreliable far from the truth. The fit therefore runs a warm-started
//! local descent first and accepts it only when the achieved NLL is
//! statistically consistent with the noise model (the NLL at the true
//! parameters concentrates around a computable mean); otherwise it retries
//! from uniform random initializations and keeps the best minimum found.

use crate::contact::ContactConfig;
use crate::design::DesignVariables;
use crate::error::{Result, SimError};
use crate::linalg::{chol_solve_spd, V3};
use crate::mech::{
    rollout_generic, tagged_params, ParamSpace, ParamVector, SimState, State, SystemKind,
    SystemModel,
};
use crate::optim::{minimize, AdamConfig, BoxBounds};
use crate::rng::{substream, tag};
use crate::sensitivity::{Dual, Scalar};
use rand::Rng;
use crate::sensors::{
    log_likelihood_generic, measurement_sequence_generic, MeasurementModel, SensorReading,
};
use serde::{Deserialize, Serialize};

/// One executed experiment: what was commanded and what was measured.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Experiment {
    pub design: DesignVariables,
    pub x0: State,
    pub readings: Vec<SensorReading>,
}

/// All data collected so far.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Dataset {
    pub experiments: Vec<Experiment>,
}

impl Dataset {
    pub fn push(&mut self, exp: Experiment) {
        self.experiments.push(exp);
    }

    pub fn len(&self) -> usize {
        self.experiments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.experiments.is_empty()
    }
}

fn nll_and_grad_impl<const D: usize>(
    data: &Dataset,
    theta: &ParamVector,
    sys: &SystemModel,
    model: &MeasurementModel,
    ccfg: &ContactConfig,
) -> Option<(f64, Vec<f64>)> {
    let p = tagged_params::<D>(theta, sys.kind).ok()?;
    let mut nll = 0.0;
    let mut grad = vec![0.0; D];
    for exp in &data.experiments {
        let horizon = exp.readings.len();
        let x0 = SimState::<Dual<f64, D>>::lift(&exp.x0);
        let controls: Vec<V3<Dual<f64, D>>> = exp
            .design
            .controls(horizon)
            .iter()
            .map(|u| [Dual::constant(u[0]), Dual::constant(u[1]), Dual::constant(u[2])])
            .collect();
        let rollout = rollout_generic(&x0, &controls, &p, sys, ccfg).ok()?;
        let means = measurement_sequence_generic(model, &rollout, &controls, &p, sys, ccfg);
        for (g, reading) in means.iter().zip(&exp.readings) {
            let ll = log_likelihood_generic(&reading.y, g, model);
            if !ll.is_finite() {
                return None;
            }
            nll -= ll.re;
            for (gi, li) in grad.iter_mut().zip(ll.im.iter()) {
                *gi -= li;
            }
        }
    }
    Some((nll, grad))
}

fn nll_and_grad(
    data: &Dataset,
    theta: &ParamVector,
    sys: &SystemModel,
    model: &MeasurementModel,
    ccfg: &ContactConfig,
) -> Option<(f64, Vec<f64>)> {
    match sys.kind {
        SystemKind::ThreeLinkArm => nll_and_grad_impl::<6>(data, theta, sys, model, ccfg),
        SystemKind::PlanarBlock => nll_and_grad_impl::<3>(data, theta, sys, model, ccfg),
    }
}

/// Negative log-likelihood of the data under candidate parameters, with
/// states and contacts regenerated by simulation. `+inf` when a candidate
/// rollout diverges; an empty dataset scores 0.
pub fn neg_log_likelihood(
    data: &Dataset,
    theta: &ParamVector,
    sys: &SystemModel,
    model: &MeasurementModel,
    ccfg: &ContactConfig,
) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    match nll_and_grad(data, theta, sys, model, ccfg) {
        Some((nll, _)) => nll,
        None => f64::INFINITY,
    }
}

/// Gradient of the NLL in the parameters (forward-mode through the rollouts).
pub fn neg_log_likelihood_grad(
    data: &Dataset,
    theta: &ParamVector,
    sys: &SystemModel,
    model: &MeasurementModel,
    ccfg: &ContactConfig,
) -> Option<Vec<f64>> {
    nll_and_grad(data, theta, sys, model, ccfg).map(|(_, g)| g)
}

/// Multi-start policy for the likelihood fit.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitOptions {
    pub optimizer: AdamConfig,
    /// Random-initialization local fits run after the warm-started fit;
    /// cheap probes while the goodness-of-fit gate passes, full fits
    /// otherwise.
    #[serde(default = "default_fit_restarts")]
    pub restarts: usize,
    /// Gate width in standard deviations of the NLL around its expectation
    /// at the true parameters.
    #[serde(default = "default_gate_sigma")]
    pub gate_sigma: f64,
    /// Damped Gauss-Newton polish iterations after the descent pass. The
    /// Gaussian NLL is a nonlinear least-squares objective whose valleys are
    /// too anisotropic for first-order steps to track; curvature steps from
    /// the same forward-mode Jacobians finish the job cheaply.
    #[serde(default = "default_polish_iters")]
    pub polish_iters: usize,
}

fn default_fit_restarts() -> usize {
    6
}

fn default_polish_iters() -> usize {
    25
}

fn default_gate_sigma() -> f64 {
    10.0
}

/// Descent iterations for probe restarts (run once the fit already passes
/// the acceptance gate).
const PROBE_DESCENT_ITERS: usize = 8;

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            optimizer: AdamConfig {
                iterations: 300,
                step: 0.05,
                ..AdamConfig::default()
            },
            restarts: default_fit_restarts(),
            gate_sigma: default_gate_sigma(),
            polish_iters: default_polish_iters(),
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.gate_sigma > 0.0) {
            return Err(SimError::Config("gate_sigma must be positive".into()));
        }
        self.optimizer.validate()
    }
}

/// NLL level below which a fit explains the data as well as the truth would:
/// expectation at the true parameters plus `gate_sigma` standard deviations.
fn nll_acceptance_level(data: &Dataset, model: &MeasurementModel, gate_sigma: f64) -> f64 {
    let readings: usize = data.experiments.iter().map(|e| e.readings.len()).sum();
    let per_reading: f64 = model
        .variances()
        .iter()
        .map(|v| 0.5 * (1.0 + (2.0 * std::f64::consts::PI * v).ln()))
        .sum();
    let scalars = (readings * model.dim()) as f64;
    readings as f64 * per_reading + gate_sigma * (scalars / 2.0).sqrt()
}

/// One projected local descent in unit-box coordinates; returns the iterate
/// and its NLL.
fn local_fit(
    data: &Dataset,
    init: &ParamVector,
    space: &ParamSpace,
    sys: &SystemModel,
    model: &MeasurementModel,
    ccfg: &ContactConfig,
    optimizer: &AdamConfig,
    polish_iters: usize,
) -> Result<(ParamVector, f64)> {
    let lo = space.lower().values();
    let width: Vec<f64> = space
        .upper()
        .values()
        .iter()
        .zip(lo)
        .map(|(u, l)| u - l)
        .collect();
    let unscale = |z: &[f64]| -> Vec<f64> {
        z.iter()
            .enumerate()
            .map(|(i, zi)| lo[i] + zi * width[i])
            .collect()
    };
    let objective = |z: &[f64]| -> Option<(f64, Vec<f64>)> {
        let theta = init.with_values(unscale(z)).ok()?;
        let (nll, gx) = nll_and_grad(data, &theta, sys, model, ccfg)?;
        let gz = gx.iter().zip(&width).map(|(g, w)| g * w).collect();
        Some((nll, gz))
    };
    let mut objective = objective;
    let z0: Vec<f64> = init
        .values()
        .iter()
        .enumerate()
        .map(|(i, x)| (x - lo[i]) / width[i])
        .collect();
    let d = z0.len();
    let bounds = BoxBounds {
        lower: vec![0.0; d],
        upper: vec![1.0; d],
    };
    let (z, mut v) = minimize(&mut objective, &z0, &bounds, optimizer)
        .map_err(|e| SimError::Optimization(format!("MLE fit found no finite NLL: {e}")))?;
    // the likelihood has long, extremely anisotropic valleys (stiff contact
    // geometry against sloppy inertial terms); finish with damped
    // Gauss-Newton steps, which follow the valley floor where any
    // first-order step length fails one direction or the other
    let mut theta = init.with_values(unscale(&z))?;
    let mut lambda = 1e-3;
    'outer: for _ in 0..polish_iters {
        let Some((nll0, jtj, jtr)) = gn_normal_eqs(data, &theta, sys, model, ccfg) else {
            break;
        };
        if nll0 < v {
            v = nll0;
        }
        let d = jtr.len();
        loop {
            let mut a = jtj.clone();
            for i in 0..d {
                a[i * d + i] += lambda * jtj[i * d + i].max(1e-12);
            }
            let mut step = jtr.clone();
            chol_solve_spd(d, &mut a, &mut step);
            let cand_vals: Vec<f64> = theta
                .values()
                .iter()
                .enumerate()
                .map(|(i, x)| (x + step[i]).clamp(lo[i], lo[i] + width[i]))
                .collect();
            let moved = cand_vals
                .iter()
                .zip(theta.values())
                .enumerate()
                .map(|(i, (a, b))| ((a - b) / width[i]).abs())
                .fold(0.0, f64::max);
            let cand = theta.with_values(cand_vals)?;
            let nll_cand = neg_log_likelihood(data, &cand, sys, model, ccfg);
            if nll_cand.is_finite() && nll_cand < nll0 {
                theta = cand;
                v = nll_cand;
                lambda = (lambda / 3.0).max(1e-12);
                if moved < 1e-12 {
                    break 'outer;
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e12 {
                break 'outer;
            }
        }
    }
    Ok((theta, v))
}

/// Gauss-Newton normal equations of the NLL at `theta`: `(nll, J^T W J,
/// J^T W r)` with `W = Sigma^-1`, flattened row-major. `None` on divergence.
fn gn_normal_eqs(
    data: &Dataset,
    theta: &ParamVector,
    sys: &SystemModel,
    model: &MeasurementModel,
    ccfg: &ContactConfig,
) -> Option<(f64, Vec<f64>, Vec<f64>)> {
    match sys.kind {
        SystemKind::ThreeLinkArm => gn_normal_eqs_impl::<6>(data, theta, sys, model, ccfg),
        SystemKind::PlanarBlock => gn_normal_eqs_impl::<3>(data, theta, sys, model, ccfg),
    }
}

fn gn_normal_eqs_impl<const D: usize>(
    data: &Dataset,
    theta: &ParamVector,
    sys: &SystemModel,
    model: &MeasurementModel,
    ccfg: &ContactConfig,
) -> Option<(f64, Vec<f64>, Vec<f64>)> {
    let p = tagged_params::<D>(theta, sys.kind).ok()?;
    let mut nll = 0.0;
    let mut jtj = vec![0.0; D * D];
    let mut jtr = vec![0.0; D];
    let log_norm: f64 = model
        .variances()
        .iter()
        .map(|v| 0.5 * (2.0 * std::f64::consts::PI * v).ln())
        .sum();
    for exp in &data.experiments {
        let horizon = exp.readings.len();
        let x0 = SimState::<Dual<f64, D>>::lift(&exp.x0);
        let controls: Vec<V3<Dual<f64, D>>> = exp
            .design
            .controls(horizon)
            .iter()
            .map(|u| [Dual::constant(u[0]), Dual::constant(u[1]), Dual::constant(u[2])])
            .collect();
        let rollout = rollout_generic(&x0, &controls, &p, sys, ccfg).ok()?;
        let means = measurement_sequence_generic(model, &rollout, &controls, &p, sys, ccfg);
        for (g, reading) in means.iter().zip(&exp.readings) {
            for ((gv, y), var) in g.iter().zip(&reading.y).zip(model.variances()) {
                if !gv.is_finite() {
                    return None;
                }
                let w = 1.0 / var;
                let e = y - gv.re;
                nll += 0.5 * w * e * e;
                for i in 0..D {
                    jtr[i] += w * gv.im[i] * e;
                    for j in 0..D {
                        jtj[i * D + j] += w * gv.im[i] * gv.im[j];
                    }
                }
            }
            nll += log_norm;
        }
    }
    nll.is_finite().then_some((nll, jtj, jtr))
}

/// Maximum-likelihood fit inside the feasible box.
///
/// The warm start `theta_init` runs first; random restarts (drawn from
/// `(seed, restart index)` streams) always follow, at probe strength while
/// the best NLL passes the acceptance gate and at full strength otherwise.
/// Deterministic given its inputs.
pub fn fit_mle(
    data: &Dataset,
    theta_init: &ParamVector,
    space: &ParamSpace,
    sys: &SystemModel,
    model: &MeasurementModel,
    ccfg: &ContactConfig,
    opts: &FitOptions,
    seed: u64,
) -> Result<ParamVector> {
    opts.validate()?;
    if !space.contains(theta_init) {
        return Err(SimError::Domain("initial parameters outside the feasible box".into()));
    }
    if data.is_empty() {
        return Ok(theta_init.clone());
    }
    let accept = nll_acceptance_level(data, model, opts.gate_sigma);
    let mut best: Option<(f64, ParamVector)> = None;
    let mut failures = Vec::new();
    for r in 0..=opts.restarts {
        let init = if r == 0 {
            theta_init.clone()
        } else {
            let mut rng = substream(seed, &[tag::FIT_RESTART, r as u64]);
            let values: Vec<f64> = space
                .lower()
                .values()
                .iter()
                .zip(space.upper().values())
                .map(|(l, u)| rng.gen_range(*l..=*u))
                .collect();
            theta_init.with_values(values)?
        };
        // A local minimum separated from the global one by a shallow barrier
        // can sit within the gate's statistical slack, so restarts always
        // run. While the best fit already passes the gate they are cut down
        // to cheap probes (a short descent burst plus the curvature polish);
        // a gate failure buys back the full descent budget.
        let gated_ok = best.as_ref().is_some_and(|(bn, _)| *bn <= accept);
        let optimizer = if r > 0 && gated_ok {
            AdamConfig {
                iterations: opts.optimizer.iterations.min(PROBE_DESCENT_ITERS),
                ..opts.optimizer
            }
        } else {
            opts.optimizer
        };
        match local_fit(data, &init, space, sys, model, ccfg, &optimizer, opts.polish_iters) {
            Ok((theta, nll)) => {
                if best.as_ref().map_or(true, |(bn, _)| nll < *bn) {
                    best = Some((nll, theta));
                }
            }
            Err(e) => failures.push(format!("restart {r}: {e}")),
        }
    }
    match best {
        Some((_, theta)) => Ok(theta),
        None => Err(SimError::Optimization(format!(
            "all fit restarts failed: {}",
            failures.join("; ")
        ))),
    }
}

/// Relative L2 parameter error `||est - true|| / ||true||`.
pub fn param_error(estimate: &ParamVector, truth: &ParamVector) -> Result<f64> {
    if estimate.labels() != truth.labels() {
        return Err(SimError::Config("parameter label mismatch".into()));
    }
    let num: f64 = estimate
        .values()
        .iter()
        .zip(truth.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let den: f64 = truth.values().iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(num / den)
}
