//! Campaign loop: design/execute/estimate iterations, method comparison
//! arithmetic, result persistence, and configuration parsing.

mod common;

use common::*;
use paramprobe::campaign::{
    format_f64, read_campaign_csv, records_to_csv, ExperimentRecord,
};
use paramprobe::config::parse_config;
use paramprobe::{
    compare_methods, emit_results, run_campaign, AdamConfig, CampaignConfig, DesignConfig,
    DesignVariables, FitOptions, MeasurementModel, Method, ParamVector, SensorKind,
};
use std::path::PathBuf;

fn block_campaign(method: Method, seed: u64, out_dir: PathBuf) -> CampaignConfig {
    let system = block_system();
    let sensor = MeasurementModel::isotropic(SensorKind::ContactForce, 0.5, &system).unwrap();
    CampaignConfig {
        system,
        horizon: 40,
        theta_true: block_truth(),
        param_space: block_space(),
        sensor,
        contact: contact_cfg(),
        design: DesignConfig {
            restarts: 2,
            optimizer: AdamConfig {
                iterations: 10,
                ..AdamConfig::default()
            },
            ..DesignConfig::default()
        },
        estimator: FitOptions {
            optimizer: AdamConfig {
                iterations: 60,
                step: 0.05,
                ..AdamConfig::default()
            },
            restarts: 2,
            ..FitOptions::default()
        },
        experiment_count: 2,
        method,
        seed,
        out_dir,
        dump_trajectories: false,
    }
}

#[test]
fn fisher_campaign_collects_and_accumulates_information() {
    let cfg = block_campaign(Method::Fisher, 42, PathBuf::from("unused"));
    let outcome = run_campaign(&cfg).unwrap();
    assert!(outcome.failure.is_none(), "{:?}", outcome.failure);
    assert_eq!(outcome.records.len(), 2);
    assert_eq!(outcome.dataset.len(), 2);
    assert_eq!(outcome.trajectories.len(), 2);
    let mut cum = 0.0;
    for (i, r) in outcome.records.iter().enumerate() {
        assert_eq!(r.index, i + 1);
        cum += r.fim_trace;
        assert!(
            (r.cum_fim_trace - cum).abs() <= 1e-9 * cum.abs(),
            "cumulative trace out of step at {}",
            r.index
        );
        assert!(r.param_error.is_finite());
        assert!(r.fim_trace >= 0.0);
    }
    // an information-seeking block design must touch the surface
    assert!(outcome.records[0].contact_steps > 0);
    assert!(outcome.records.last().unwrap().cum_fim_trace > 0.0);
}

#[test]
fn campaigns_are_deterministic_given_the_config() {
    for method in [Method::Fisher, Method::Random] {
        let cfg = block_campaign(method, 9, PathBuf::from("unused"));
        let a = run_campaign(&cfg).unwrap();
        let b = run_campaign(&cfg).unwrap();
        let csv_a = records_to_csv(&a.records, cfg.method, cfg.seed);
        let csv_b = records_to_csv(&b.records, cfg.method, cfg.seed);
        assert_eq!(csv_a, csv_b, "{method}");
        assert!(!a.records.is_empty());
    }
}

fn record(index: usize, param_error: f64, cum_fim_trace: f64) -> ExperimentRecord {
    ExperimentRecord {
        index,
        design: DesignVariables::BlockThrow {
            vx: 0.0,
            vz: 0.0,
            omega: 0.0,
            z0: 0.5,
        },
        contact_steps: 0,
        max_normal_force: 0.0,
        fim_trace: cum_fim_trace,
        cum_fim_trace,
        theta_hat: ParamVector::block(1.0, 0.1, 0.1).unwrap(),
        param_error,
    }
}

#[test]
fn comparison_arithmetic() {
    // 0.5 -> 0.08 is an 84% reduction, 0.5 -> 0.015 is 97%
    let cases = [(0.5, 0.08, 84.0), (0.5, 0.015, 97.0)];
    for (er, ef, pct) in cases {
        let fisher = vec![record(1, 0.3, 5.0), record(2, ef, 10.0)];
        let random = vec![record(1, 0.6, 2.0), record(2, er, 4.0)];
        let report = compare_methods(&fisher, &random).unwrap();
        assert!((report.error_reduction_pct.unwrap() - pct).abs() < 1e-12);
        assert!((report.info_ratio - 2.5).abs() < 1e-12);
    }
    // identical arms: zero reduction, unit ratio
    let same = vec![record(1, 0.2, 3.0)];
    let report = compare_methods(&same, &same).unwrap();
    assert_eq!(report.error_reduction_pct.unwrap(), 0.0);
    assert_eq!(report.info_ratio, 1.0);
    // a perfect random arm makes the reduction undefined
    let perfect = vec![record(1, 0.0, 3.0)];
    assert!(compare_methods(&same, &perfect).unwrap().error_reduction_pct.is_none());
    // record counts must match and be nonempty
    assert!(compare_methods(&same, &[]).is_err());
    let longer = vec![record(1, 0.2, 3.0), record(2, 0.1, 6.0)];
    assert!(compare_methods(&same, &longer).is_err());
}

#[test]
fn emitted_results_round_trip_and_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = block_campaign(Method::Random, 3, dir.path().to_path_buf());
    cfg.dump_trajectories = true;
    let outcome = run_campaign(&cfg).unwrap();
    assert!(outcome.failure.is_none());
    let written = emit_results(&outcome, &cfg).unwrap();
    let names: Vec<String> = written
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    for expected in [
        "campaign.csv",
        "estimate.json",
        "dataset.json",
        "trajectory_1.json",
        "trajectory_2.json",
    ] {
        assert!(names.iter().any(|n| n == expected), "missing {expected}");
    }

    // CSV parses back with exact values (17 significant digits round-trip)
    let rows = read_campaign_csv(&cfg.out_dir.join("campaign.csv")).unwrap();
    assert_eq!(rows.len(), outcome.records.len());
    for (row, rec) in rows.iter().zip(&outcome.records) {
        assert_eq!(row.index, rec.index);
        assert_eq!(row.method, "random");
        assert_eq!(row.seed, 3);
        assert_eq!(row.param_error, rec.param_error);
        assert_eq!(row.cum_fim_trace, rec.cum_fim_trace);
    }

    // a second emission writes byte-identical files
    let before = std::fs::read(cfg.out_dir.join("campaign.csv")).unwrap();
    emit_results(&outcome, &cfg).unwrap();
    let after = std::fs::read(cfg.out_dir.join("campaign.csv")).unwrap();
    assert_eq!(before, after);
}

#[test]
fn float_formatting_round_trips() {
    for v in [0.0, 1.0, -1.5, 0.1, 1e-300, 3.141592653589793, f64::MIN_POSITIVE] {
        let s = format_f64(v);
        let back: f64 = s.parse().unwrap();
        assert_eq!(back, v, "{s}");
    }
}

const CONFIG: &str = r#"
[system]
kind = "planar-block"
gravity = 9.81
dt = 0.01

[parameters]
theta_true = [1.2, 0.12, 0.08]
lower = [0.5, 0.05, 0.03]
upper = [2.5, 0.25, 0.2]

[sensor]
kind = "contact-force"
sigma = 0.5

[contact]
k_n = 10000.0
c_n = 0.5
eps_phi = 0.001
mu = 0.6
eps_v = 0.01

[design]
u_max = 5.0
knot_len = 10
v_max = 3.0
omega_max = 10.0
z0_min = 0.3
z0_max = 1.0
restarts = 2

[design.optimizer]
iterations = 10
step = 0.1
beta1 = 0.9
beta2 = 0.999

[estimator]
restarts = 2

[estimator.optimizer]
iterations = 60
step = 0.05
beta1 = 0.9
beta2 = 0.999

[campaign]
horizon = 40
experiment_count = 2
method = "fisher"
seed = 7
out_dir = "out"
"#;

#[test]
fn config_parses_and_validates() {
    let cfg = parse_config(CONFIG).unwrap();
    assert_eq!(cfg.method, Method::Fisher);
    assert_eq!(cfg.seed, 7);
    assert_eq!(cfg.horizon, 40);
    assert_eq!(cfg.experiment_count, 2);
    assert_eq!(cfg.theta_true.values(), &[1.2, 0.12, 0.08]);
    assert_eq!(cfg.design.restarts, 2);
    assert_eq!(cfg.estimator.restarts, 2);
    // defaulted gate width
    assert_eq!(cfg.estimator.gate_sigma, 10.0);
    assert!(!cfg.dump_trajectories);
}

#[test]
fn config_rejects_unknown_keys_and_bad_values() {
    let unknown = CONFIG.replace("[campaign]", "[campaign]\ntypo_key = 1");
    assert!(parse_config(&unknown).is_err());
    let bad_method = CONFIG.replace("method = \"fisher\"", "method = \"greedy\"");
    assert!(parse_config(&bad_method).is_err());
    let truth_outside = CONFIG.replace("theta_true = [1.2, 0.12, 0.08]", "theta_true = [3.0, 0.12, 0.08]");
    assert!(parse_config(&truth_outside).is_err());
    let zero_horizon = CONFIG.replace("horizon = 40", "horizon = 0");
    assert!(parse_config(&zero_horizon).is_err());
    let neg_sigma = CONFIG.replace("sigma = 0.5", "sigma = -0.5");
    assert!(parse_config(&neg_sigma).is_err());
    let wrong_dim = CONFIG.replace("theta_true = [1.2, 0.12, 0.08]", "theta_true = [1.2, 0.12]");
    assert!(parse_config(&wrong_dim).is_err());
}
