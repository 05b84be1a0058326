use paramprobe::design::design_objective;
use paramprobe::*;

fn knots(shoulder: f64, elbow: f64, wrist: f64, n: usize) -> DesignVariables {
    DesignVariables::ArmTorques {
        knots: vec![[shoulder, elbow, wrist]; n],
        knot_len: 50,
    }
}

fn main() {
    let system = SystemModel::new(SystemKind::ThreeLinkArm, 9.81, 0.002, 0.55, [1.0; 3]).unwrap();
    let sensor = MeasurementModel::isotropic(SensorKind::ContactForce, 10.0, &system).unwrap();
    let ccfg = ContactConfig { k_n: 1000.0, c_n: 2.0, eps_phi: 0.01, mu: 0.3, eps_v: 0.05, ..ContactConfig::default() };
    let dcfg = DesignConfig {
        u_max: 10.0,
        knot_len: 10,
        param_weights: Some(vec![0.055, 0.045, 0.027, 0.6, 0.55, 0.5]),
        ..DesignConfig::default()
    };
    let mid = ParamSpace::new(
        ParamVector::arm([0.005, 0.005, 0.003], [0.2, 0.15, 0.1]).unwrap(),
        ParamVector::arm([0.06, 0.05, 0.03], [0.8, 0.7, 0.6]).unwrap(),
    )
    .unwrap()
    .midpoint();
    let truth = ParamVector::arm([0.025, 0.016, 0.009], [0.5, 0.4, 0.3]).unwrap();
    let horizon = 60;
    // gravity torque at the start posture is roughly (18, 9.6, 1.4) N*m
    let cases: Vec<(&str, DesignVariables)> = vec![
        ("sag (zero)", knots(0.0, 0.0, 0.0, 6)),
        ("press down", knots(-10.0, -5.0, -2.0, 6)),
        ("part hold", knots(10.0, 5.0, 1.0, 6)),
        ("wrist work", knots(10.0, -5.0, 5.0, 6)),
        ("jitter", DesignVariables::ArmTorques {
            knots: vec![[10.0, -10.0, 10.0], [-10.0, 10.0, -10.0], [10.0, -10.0, 10.0], [-10.0, 10.0, -10.0], [10.0, -10.0, 10.0], [-10.0, 10.0, -10.0]],
            knot_len: 10,
        }),
        ("pump", DesignVariables::ArmTorques {
            knots: vec![[-10.0, -5.0, -2.0], [10.0, 5.0, 2.0], [-10.0, -5.0, -2.0], [10.0, 5.0, 2.0], [-10.0, -5.0, -2.0], [10.0, 5.0, 2.0]],
            knot_len: 10,
        }),
        ("slide", knots(-5.0, 10.0, -10.0, 6)),
        ("gentle", knots(-2.0, -1.0, -0.5, 6)),
    ];
    for (name, d) in &cases {
        let v_mid = design_objective(d, &mid, &system, &sensor, &ccfg, &dcfg, horizon)
            .map(|(v, _)| v)
            .unwrap_or(f64::NAN);
        let v_truth = design_objective(d, &truth, &system, &sensor, &ccfg, &dcfg, horizon)
            .map(|(v, _)| v)
            .unwrap_or(f64::NAN);
        println!("{name:20} mid {v_mid:.3e}  truth {v_truth:.3e}");
    }
}
