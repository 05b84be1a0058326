//! Fisher information: outer-product arithmetic, the linear-Gaussian toy with
//! its closed-form information, Monte Carlo agreement between empirical and
//! predicted matrices, and PSD/scale properties.

mod common;

use common::*;
use paramprobe::fisher::predicted_fim_from_jacobians;
use paramprobe::mech::{bias, Params};
use paramprobe::sensors::trajectory_means;
use paramprobe::{
    accumulate, empirical_fim, predicted_fim, rollout, simulate_measurement, trace_objective,
    trajectory_scores, FisherMatrix, MeasurementModel, ParamVector, SensorKind, State, SystemModel,
    Trajectory,
};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[test]
fn empirical_fim_outer_products() {
    let zero = empirical_fim(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
    assert_eq!(zero.trace(), 0.0);
    assert_eq!(zero.min_eigenvalue(), 0.0);

    let single = empirical_fim(&[vec![1.0, 2.0]]).unwrap();
    assert_eq!(single.get(0, 0), 1.0);
    assert_eq!(single.get(0, 1), 2.0);
    assert_eq!(single.get(1, 0), 2.0);
    assert_eq!(single.get(1, 1), 4.0);
    assert_eq!(single.trace(), 5.0);
    // rank-1: trace equals the squared norm, second eigenvalue zero
    assert!(single.min_eigenvalue().abs() < 1e-12);

    let empty = empirical_fim(&[]).unwrap();
    assert_eq!(empty.dim(), 0);
    assert!(empirical_fim(&[vec![1.0], vec![1.0, 2.0]]).is_err());
}

#[test]
fn linear_gaussian_toy_information() {
    // g(theta) = a * theta with noise variance sigma^2: the Fisher
    // information per sample is a^2 / sigma^2
    let a = 1.7;
    let sigma = 0.6;
    let expected = a * a / (sigma * sigma);

    // predicted: single jacobian row
    let predicted = predicted_fim_from_jacobians(&[vec![a]], &[sigma * sigma]).unwrap();
    assert!((predicted.get(0, 0) - expected).abs() < 1e-12);

    // empirical: scores xi = a (y - a theta) / sigma^2 over 1000 draws
    let theta = 0.9;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let scores: Vec<Vec<f64>> = (0..1000)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            let y = a * theta + sigma * z;
            vec![a * (y - a * theta) / (sigma * sigma)]
        })
        .collect();
    let fim = empirical_fim(&scores).unwrap();
    let per_sample = fim.get(0, 0) / 1000.0;
    assert!(
        (per_sample - expected).abs() < 0.1 * expected,
        "{per_sample} vs {expected}"
    );
}

#[test]
fn trace_and_accumulate_arithmetic() {
    let mut a = FisherMatrix::zero(3);
    a.add_outer(&[1.0, 0.0, 0.0], 1.0);
    a.add_outer(&[0.0, 1.0, 0.0], 1.0);
    a.add_outer(&[0.0, 0.0, 1.0], 1.0);
    assert_eq!(trace_objective(&a), 3.0);

    let xi = [0.3, -1.2, 0.7];
    let mut r1 = FisherMatrix::zero(3);
    r1.add_outer(&xi, 1.0);
    let norm2: f64 = xi.iter().map(|v| v * v).sum();
    assert!((trace_objective(&r1) - norm2).abs() < 1e-12);

    let sum = accumulate(&a, &r1).unwrap();
    assert!((trace_objective(&sum) - (3.0 + norm2)).abs() < 1e-12);
    // commutative, zero identity
    let sum2 = accumulate(&r1, &a).unwrap();
    assert_eq!(sum.data(), sum2.data());
    let id = accumulate(&FisherMatrix::zero(3), &a).unwrap();
    assert_eq!(id.data(), a.data());
    assert!(accumulate(&a, &FisherMatrix::zero(2)).is_err());
}

fn press_trajectory(sys: &SystemModel, theta: &ParamVector, n: usize) -> Trajectory {
    let q0 = [-0.3, -0.2, -0.2];
    let p: Params<f64> = Params::constant(theta, sys.kind).unwrap();
    let grav = bias(&q0, &[0.0; 3], &p, sys);
    let u = [0.95 * grav[0], 0.95 * grav[1], 0.95 * grav[2]];
    rollout(&State::new(q0, [0.0; 3]), &vec![u; n], theta, sys, &contact_cfg()).unwrap()
}

/// Block tossed so it lands and interacts with the surface inside the horizon.
fn bouncing_block(sys: &SystemModel, theta: &ParamVector, n: usize) -> Trajectory {
    let x0 = State::new([0.0, 0.3, 0.2], [0.5, -0.5, 1.0]);
    rollout(&x0, &vec![[0.0; 3]; n], theta, sys, &contact_cfg()).unwrap()
}

#[test]
fn no_contact_means_no_information_for_force_sensor() {
    let sys = block_system();
    let theta = block_truth();
    let model = MeasurementModel::isotropic(SensorKind::ContactForce, 0.5, &sys).unwrap();
    // high free flight: the contact-force sensor never activates, so nothing
    // is learned about any parameter
    let traj = rollout(
        &State::new([0.0, 3.0, 0.1], [1.0, 3.0, 0.5]),
        &vec![[0.0; 3]; 100],
        &theta,
        &sys,
        &contact_cfg(),
    )
    .unwrap();
    let fim = predicted_fim(&traj, &theta, &model, &sys, &contact_cfg()).unwrap();
    assert!(fim.trace() < 1e-12, "trace {}", fim.trace());

    // the same block bouncing on the surface is informative
    let informative = bouncing_block(&sys, &theta, 100);
    let fim = predicted_fim(&informative, &theta, &model, &sys, &contact_cfg()).unwrap();
    assert!(fim.trace() > 1.0, "trace {}", fim.trace());
}

#[test]
fn predicted_fim_matches_monte_carlo_empirical() {
    let sys = block_system();
    let theta = block_truth();
    let cfg = contact_cfg();
    let model = MeasurementModel::isotropic(SensorKind::ContactForce, 0.5, &sys).unwrap();
    let traj = bouncing_block(&sys, &theta, 60);
    let predicted = predicted_fim(&traj, &theta, &model, &sys, &cfg).unwrap();
    let means = trajectory_means(&traj, &theta, &model, &sys, &cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let mut avg = FisherMatrix::zero(theta.dim());
    let realizations = 500;
    for _ in 0..realizations {
        let readings: Vec<Vec<f64>> = means
            .iter()
            .enumerate()
            .map(|(i, g)| simulate_measurement(g, &model, i, &mut rng).unwrap().y)
            .collect();
        let scores = trajectory_scores(&traj, &readings, &theta, &model, &sys, &cfg).unwrap();
        avg = accumulate(&avg, &empirical_fim(&scores).unwrap()).unwrap();
    }
    avg.scale(1.0 / realizations as f64);
    let rel = (avg.trace() - predicted.trace()).abs() / predicted.trace();
    assert!(rel < 0.1, "MC trace {} vs predicted {}", avg.trace(), predicted.trace());
}

#[test]
fn covariance_scaling_inverts_information() {
    let sys = arm_system();
    let theta = arm_truth();
    let cfg = contact_cfg();
    let model = MeasurementModel::isotropic(SensorKind::ContactForce, 0.5, &sys).unwrap();
    let traj = press_trajectory(&sys, &theta, 80);
    let base = predicted_fim(&traj, &theta, &model, &sys, &cfg).unwrap();
    let c = 4.0;
    let scaled = predicted_fim(&traj, &theta, &model.scaled(c).unwrap(), &sys, &cfg).unwrap();
    for i in 0..base.dim() {
        for j in 0..base.dim() {
            assert!(
                (scaled.get(i, j) * c - base.get(i, j)).abs()
                    <= 1e-12 * (1.0 + base.get(i, j).abs()),
                "entry ({i},{j})"
            );
        }
    }
}

#[test]
fn produced_matrices_are_psd() {
    let sys = block_system();
    let theta = block_truth();
    let cfg = contact_cfg();
    for kind in [SensorKind::ContactForce, SensorKind::Accelerometer] {
        let sigma = match kind {
            SensorKind::ContactForce => 0.5,
            SensorKind::Accelerometer => 0.2,
        };
        let model = MeasurementModel::isotropic(kind, sigma, &sys).unwrap();
        let traj = bouncing_block(&sys, &theta, 80);
        let fim = predicted_fim(&traj, &theta, &model, &sys, &cfg).unwrap();
        let floor = -1e-10 * (1.0 + fim.trace());
        assert!(fim.min_eigenvalue() >= floor, "{kind:?}: {}", fim.min_eigenvalue());
    }
}
