//! Projected adaptive-moment ascent with monotone acceptance.
//!
//! Used by both the experiment-design solver (maximizing an information
//! objective) and the likelihood fit (minimizing, via negation). Candidate
//! steps that fail to improve, or that evaluate non-finite, shrink the step
//! scale and are rejected, so the accepted iterate sequence is monotone.

use crate::error::{Result, SimError};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub iterations: usize,
    /// Initial step size.
    pub step: f64,
    /// First-moment smoothing constant.
    pub beta1: f64,
    /// Second-moment smoothing constant.
    pub beta2: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            iterations: 150,
            step: 0.1,
            beta1: 0.9,
            beta2: 0.999,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(SimError::Config("optimizer needs iterations >= 1".into()));
        }
        if !(self.step > 0.0) {
            return Err(SimError::Config("optimizer step must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(SimError::Config("moment constants must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Elementwise box bounds.
#[derive(Clone, Debug)]
pub struct BoxBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxBounds {
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, v)| v.clamp(self.lower[i], self.upper[i]))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .all(|(i, v)| *v >= self.lower[i] && *v <= self.upper[i])
    }
}

const BACKOFF_ATTEMPTS: usize = 6;
const STEP_GROWTH: f64 = 1.15;
const STEP_SHRINK: f64 = 0.5;

/// Maximize `f` from `x0` inside `bounds`. `f` returns the objective value
/// and gradient, or `None` when the evaluation diverged.
///
/// Returns the best accepted iterate and its objective value.
pub fn maximize<F>(
    mut f: F,
    x0: &[f64],
    bounds: &BoxBounds,
    cfg: &AdamConfig,
) -> Result<(Vec<f64>, f64)>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    cfg.validate()?;
    let mut x = bounds.project(x0);
    let Some((mut val, mut grad)) = f(&x) else {
        return Err(SimError::Optimization(
            "objective diverged at the initial point".into(),
        ));
    };
    if !val.is_finite() {
        return Err(SimError::Optimization(
            "objective non-finite at the initial point".into(),
        ));
    }
    let n = x.len();
    let mut m = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut lr = cfg.step;
    let lr_cap = cfg.step * 4.0;
    for t in 1..=cfg.iterations {
        for i in 0..n {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        }
        let bc1 = 1.0 - cfg.beta1.powi(t as i32);
        let bc2 = 1.0 - cfg.beta2.powi(t as i32);
        let mut accepted = false;
        for _ in 0..BACKOFF_ATTEMPTS {
            let candidate: Vec<f64> = (0..n)
                .map(|i| x[i] + lr * (m[i] / bc1) / ((v[i] / bc2).sqrt() + 1e-8))
                .collect();
            let candidate = bounds.project(&candidate);
            if let Some((cval, cgrad)) = f(&candidate) {
                if cval.is_finite() && cval >= val {
                    x = candidate;
                    val = cval;
                    grad = cgrad;
                    lr = (lr * STEP_GROWTH).min(lr_cap);
                    accepted = true;
                    break;
                }
            }
            lr *= STEP_SHRINK;
        }
        if !accepted {
            // the momentum direction can stop being an ascent direction on
            // curved valleys; fall back to backtracking steepest ascent and
            // reset the stale moments before continuing
            let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if gnorm > 0.0 {
                let mut ell = cfg.step;
                while ell > 1e-14 * cfg.step {
                    let candidate: Vec<f64> =
                        (0..n).map(|i| x[i] + ell * grad[i] / gnorm).collect();
                    let candidate = bounds.project(&candidate);
                    if let Some((cval, cgrad)) = f(&candidate) {
                        if cval.is_finite() && cval > val {
                            x = candidate;
                            val = cval;
                            grad = cgrad;
                            m = vec![0.0; n];
                            v = vec![0.0; n];
                            lr = cfg.step;
                            accepted = true;
                            break;
                        }
                    }
                    ell *= STEP_SHRINK;
                }
            }
        }
        if !accepted {
            // no ascent in either direction family: converged (or pinned to
            // the boundary)
            break;
        }
    }
    Ok((x, val))
}

/// Minimize by negating the objective.
pub fn minimize<F>(
    mut f: F,
    x0: &[f64],
    bounds: &BoxBounds,
    cfg: &AdamConfig,
) -> Result<(Vec<f64>, f64)>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let neg = |x: &[f64]| {
        f(x).map(|(v, g)| (-v, g.iter().map(|gi| -gi).collect::<Vec<f64>>()))
    };
    let (x, v) = maximize(neg, x0, bounds, cfg)?;
    Ok((x, -v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad_bounds(n: usize) -> BoxBounds {
        BoxBounds {
            lower: vec![-10.0; n],
            upper: vec![10.0; n],
        }
    }

    #[test]
    fn maximizes_concave_quadratic() {
        // f(x) = -(x0-1)^2 - 2(x1+2)^2
        let f = |x: &[f64]| {
            let v = -(x[0] - 1.0).powi(2) - 2.0 * (x[1] + 2.0).powi(2);
            Some((v, vec![-2.0 * (x[0] - 1.0), -4.0 * (x[1] + 2.0)]))
        };
        let cfg = AdamConfig {
            iterations: 400,
            step: 0.2,
            ..Default::default()
        };
        let (x, v) = maximize(f, &[5.0, 5.0], &quad_bounds(2), &cfg).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-3, "x = {x:?}");
        assert!((x[1] + 2.0).abs() < 1e-3, "x = {x:?}");
        assert!(v > -1e-5);
    }

    #[test]
    fn respects_bounds() {
        // unconstrained max at x = 20, box caps at 10
        let f = |x: &[f64]| Some((-(x[0] - 20.0).powi(2), vec![-2.0 * (x[0] - 20.0)]));
        let cfg = AdamConfig {
            iterations: 300,
            step: 0.5,
            ..Default::default()
        };
        let (x, _) = maximize(f, &[0.0], &quad_bounds(1), &cfg).unwrap();
        assert!((x[0] - 10.0).abs() < 1e-6);
    }

    #[test]
    fn monotone_acceptance() {
        let mut values = Vec::new();
        let f = |x: &[f64]| {
            let v = -(x[0]).powi(2);
            Some((v, vec![-2.0 * x[0]]))
        };
        let cfg = AdamConfig {
            iterations: 50,
            step: 1.0,
            ..Default::default()
        };
        // wrap to record accepted values by probing: rerun and check final >= initial
        let (x, v) = maximize(f, &[3.0], &quad_bounds(1), &cfg).unwrap();
        values.push(v);
        assert!(v >= -9.0);
        assert!(x[0].abs() <= 3.0);
    }

    #[test]
    fn errors_on_diverged_start() {
        let f = |_: &[f64]| -> Option<(f64, Vec<f64>)> { None };
        let cfg = AdamConfig::default();
        assert!(maximize(f, &[0.0], &quad_bounds(1), &cfg).is_err());
    }
}
