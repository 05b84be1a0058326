//! Contact force law: tail behavior, friction properties, smoothness across
//! the surface, and consistency of the system-level solve with per-point
//! kinematics.

mod common;

use common::*;
use paramprobe::contact::point_force;
use paramprobe::sensitivity::{Dual, Scalar};
use paramprobe::{complementarity_residual, solve_contact, ContactConfig, State};
use proptest::prelude::*;

#[test]
fn far_side_force_is_negligible() {
    let cfg = contact_cfg();
    for v_n in [-1.0, 0.0, 1.0] {
        let (n, t) = point_force(10.0 * cfg.eps_phi, 0.3, v_n, &cfg);
        assert!(n < 1e-3 * cfg.k_n * cfg.eps_phi, "lambda_n = {n}");
        assert!(t.abs() < 1e-3 * cfg.k_n * cfg.eps_phi);
    }
}

#[test]
fn deep_penetration_is_linear_in_depth() {
    let cfg = contact_cfg();
    let phi = -5.0 * cfg.eps_phi;
    let (n, _) = point_force(phi, 0.0, 0.0, &cfg);
    let linear = cfg.k_n * (-phi);
    assert!((n - linear).abs() < 0.02 * linear, "lambda_n = {n} vs k|phi| = {linear}");
}

#[test]
fn static_penetration_has_no_friction() {
    let cfg = contact_cfg();
    let (n, t) = point_force(-2.0 * cfg.eps_phi, 0.0, 0.0, &cfg);
    assert!(n > 0.0);
    assert_eq!(t, 0.0);
}

#[test]
fn fast_sliding_saturates_at_coulomb_limit() {
    let cfg = contact_cfg();
    for sign in [1.0, -1.0] {
        let v_t = sign * 10.0 * cfg.eps_v;
        let (n, t) = point_force(-2.0 * cfg.eps_phi, v_t, 0.0, &cfg);
        assert!(t * sign < 0.0, "friction must oppose sliding");
        assert!((t.abs() - cfg.mu * n).abs() < 1e-4 * cfg.mu * n);
    }
}

#[test]
fn approach_stiffens_and_separation_softens() {
    let cfg = contact_cfg();
    let (at_rest, _) = point_force(-2.0 * cfg.eps_phi, 0.0, 0.0, &cfg);
    let (approaching, _) = point_force(-2.0 * cfg.eps_phi, 0.0, -1.0, &cfg);
    let (separating, _) = point_force(-2.0 * cfg.eps_phi, 0.0, 1.0, &cfg);
    assert!(approaching > at_rest);
    assert!(separating < at_rest);
    // no adhesion even at fast separation
    let (fast_sep, _) = point_force(-2.0 * cfg.eps_phi, 0.0, 50.0, &cfg);
    assert!(fast_sep >= 0.0);
}

#[test]
fn force_is_smooth_across_the_surface() {
    let cfg = contact_cfg();
    // dual derivative in distance vs central finite difference, including
    // right at phi = 0
    for phi in [-3e-3, -1e-4, 0.0, 1e-4, 3e-3] {
        for (v_t, v_n) in [(0.0, 0.0), (0.05, -0.2), (-0.3, 0.1)] {
            let d = Dual::<f64, 1>::variable(phi, 0);
            let (n, t) = point_force(d, Dual::constant(v_t), Dual::constant(v_n), &cfg);
            let h = 1e-8;
            let (nh, th) = point_force(phi + h, v_t, v_n, &cfg);
            let (nl, tl) = point_force(phi - h, v_t, v_n, &cfg);
            let fd_n = (nh - nl) / (2.0 * h);
            let fd_t = (th - tl) / (2.0 * h);
            assert!(
                (n.im[0] - fd_n).abs() <= 1e-4 * fd_n.abs().max(1.0),
                "dn/dphi at {phi}: {} vs {}",
                n.im[0],
                fd_n
            );
            assert!((t.im[0] - fd_t).abs() <= 1e-4 * fd_t.abs().max(1.0));
        }
    }
}

proptest! {
    #[test]
    fn friction_always_dissipates(
        phi in -5e-3f64..5e-3,
        v_t in -2.0f64..2.0,
        v_n in -2.0f64..2.0,
    ) {
        let (n, t) = point_force(phi, v_t, v_n, &contact_cfg());
        prop_assert!(n >= 0.0);
        prop_assert!(t * v_t <= 0.0);
        prop_assert!(t.abs() <= contact_cfg().mu * n * (1.0 + 1e-12));
    }

    #[test]
    fn normal_force_monotone_in_depth(
        phi in -5e-3f64..5e-3,
        delta in 1e-6f64..5e-3,
        v_t in -1.0f64..1.0,
        v_n in -1.0f64..1.0,
    ) {
        let (shallow, _) = point_force(phi, v_t, v_n, &contact_cfg());
        let (deep, _) = point_force(phi - delta, v_t, v_n, &contact_cfg());
        prop_assert!(deep >= shallow);
    }
}

#[test]
fn solve_contact_matches_pointwise_law() {
    let sys = block_system();
    let theta = block_truth();
    let cfg = contact_cfg();
    let x = State::new([0.1, 0.075, 0.3], [0.4, -0.5, 1.2]);
    let set = solve_contact(&x, &theta, &sys, &cfg).unwrap();
    assert_eq!(set.points.len(), 4);
    let (hx, hz) = (0.12, 0.08);
    let (s, c) = x.q[2].sin_cos();
    for (i, (bx, bz)) in [(hx, hz), (hx, -hz), (-hx, -hz), (-hx, hz)].iter().enumerate() {
        // corner world offset and rigid-body point velocity
        let rx = bx * c - bz * s;
        let rz = bx * s + bz * c;
        let dist = x.q[1] + rz;
        let v_t = x.qdot[0] - x.qdot[2] * rz;
        let v_n = x.qdot[1] + x.qdot[2] * rx;
        let (n, t) = point_force(dist, v_t, v_n, &cfg);
        assert!((set.points[i].dist - dist).abs() < 1e-12);
        assert!((set.points[i].normal - n).abs() < 1e-9 * (1.0 + n.abs()));
        assert!((set.points[i].tangential - t).abs() < 1e-9 * (1.0 + t.abs()));
        assert_eq!(set.points[i].active, dist < cfg.activation_band());
    }
}

#[test]
fn complementarity_residual_examples() {
    let sys = block_system();
    let theta = block_truth();
    let cfg = contact_cfg();
    // airborne block: zero forces, zero residual
    let set = solve_contact(&State::new([0.0, 2.0, 0.0], [0.0; 3]), &theta, &sys, &cfg).unwrap();
    let dists: Vec<f64> = set.points.iter().map(|p| p.dist).collect();
    assert_eq!(complementarity_residual(&set, &dists).unwrap(), 0.0);
    // count mismatch is an error
    assert!(complementarity_residual(&set, &dists[..2]).is_err());
}

#[test]
fn config_validation() {
    let cfg = contact_cfg();
    assert!(cfg.validate().is_ok());
    assert!((cfg.activation_band() - 10.0 * cfg.eps_phi).abs() < 1e-15);
    for bad in [
        ContactConfig { k_n: 0.0, ..cfg },
        ContactConfig { mu: -0.1, ..cfg },
        ContactConfig { eps_v: f64::NAN, ..cfg },
    ] {
        assert!(bad.validate().is_err());
    }
}
