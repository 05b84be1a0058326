use paramprobe::*;
use std::path::PathBuf;
use std::time::Instant;

fn arm_cfg(method: Method, seed: u64) -> CampaignConfig {
    let system = SystemModel::new(SystemKind::ThreeLinkArm, 9.81, 0.002, 0.55, [1.0; 3]).unwrap();
    let sensor = MeasurementModel::isotropic(SensorKind::Accelerometer, 20.0, &system).unwrap();
    CampaignConfig {
        system,
        horizon: 60,
        theta_true: ParamVector::arm([0.025, 0.016, 0.009], [0.5, 0.4, 0.3]).unwrap(),
        param_space: ParamSpace::new(
            ParamVector::arm([0.005, 0.005, 0.003], [0.2, 0.15, 0.1]).unwrap(),
            ParamVector::arm([0.06, 0.05, 0.03], [0.8, 0.7, 0.6]).unwrap(),
        )
        .unwrap(),
        sensor,
        contact: ContactConfig { k_n: 1000.0, c_n: 2.0, eps_phi: 0.01, mu: 0.3, eps_v: 0.05, ..ContactConfig::default() },
        design: DesignConfig {
            u_max: 10.0,
            knot_len: 10,
            restarts: 2,
            info_cap: f64::INFINITY,
            optimizer: AdamConfig { iterations: 10, ..AdamConfig::default() },
            ..DesignConfig::default()
        },
        estimator: FitOptions {
            optimizer: AdamConfig { iterations: 15, step: 0.05, ..AdamConfig::default() },
            restarts: 3,
            polish_iters: 25,
            ..FitOptions::default()
        },
        experiment_count: 20,
        method,
        seed,
        out_dir: PathBuf::from("unused"),
        dump_trajectories: false,
    }
}

fn block_cfg(method: Method, seed: u64) -> CampaignConfig {
    let system = SystemModel::new(SystemKind::PlanarBlock, 9.81, 0.01, 0.0, [1.0; 3]).unwrap();
    let sensor = MeasurementModel::isotropic(SensorKind::ContactForce, 10.0, &system).unwrap();
    CampaignConfig {
        system,
        horizon: 30,
        theta_true: ParamVector::block(1.2, 0.12, 0.08).unwrap(),
        param_space: ParamSpace::new(
            ParamVector::block(0.5, 0.05, 0.03).unwrap(),
            ParamVector::block(2.5, 0.25, 0.2).unwrap(),
        )
        .unwrap(),
        sensor,
        contact: ContactConfig { k_n: 1000.0, c_n: 2.0, eps_phi: 0.01, ..ContactConfig::default() },
        design: DesignConfig {
            v_max: 0.6,
            omega_max: 1.0,
            z0_min: 0.4,
            z0_max: 1.2,
            restarts: 3,
            optimizer: AdamConfig { iterations: 12, ..AdamConfig::default() },
            ..DesignConfig::default()
        },
        estimator: FitOptions {
            optimizer: AdamConfig { iterations: 150, step: 0.05, ..AdamConfig::default() },
            restarts: 8,
            ..FitOptions::default()
        },
        experiment_count: 20,
        method,
        seed,
        out_dir: PathBuf::from("unused"),
        dump_trajectories: false,
    }
}

fn main() {
    let t_all = Instant::now();
    let mut reductions = Vec::new();
    for seed in [1u64, 2, 3, 4, 5] {
        let mut line = format!("seed {seed}:");
        let mut finals = Vec::new();
        for method in [Method::Fisher, Method::Random] {
            let which = std::env::args().nth(1).unwrap_or_else(|| "arm".into());
            let cfg = if which == "block" { block_cfg(method, seed) } else { arm_cfg(method, seed) };
            let t = Instant::now();
            let out = run_campaign(&cfg).unwrap();
            let last = out.records.last().unwrap();
            line += &format!(
                " {method}: err {:.4} cumfim {:.3e} t {:.1?} fail {:?} |",
                last.param_error,
                last.cum_fim_trace,
                t.elapsed(),
                out.failure
            );
            finals.push(last.param_error);
            if false {
                for r in &out.records {
                    println!(
                        "  k {:2} err {:.4} fim {:.3e} contact {:3} maxF {:7.2}",
                        r.index, r.param_error, r.fim_trace, r.contact_steps, r.max_normal_force
                    );
                }
            }
            if false {
                let last = out.records.last().unwrap();
                let nll_hat = neg_log_likelihood(&out.dataset, &last.theta_hat, &cfg.system, &cfg.sensor, &cfg.contact);
                let nll_true = neg_log_likelihood(&out.dataset, &cfg.theta_true, &cfg.system, &cfg.sensor, &cfg.contact);
                let polish_opts = FitOptions { restarts: 0, ..cfg.estimator.clone() };
                let from_truth = fit_mle(&out.dataset, &cfg.theta_true, &cfg.param_space, &cfg.system, &cfg.sensor, &cfg.contact, &polish_opts, cfg.seed).unwrap();
                let nll_ft = neg_log_likelihood(&out.dataset, &from_truth, &cfg.system, &cfg.sensor, &cfg.contact);
                let err_ft = param_error(&from_truth, &cfg.theta_true).unwrap();
                println!("  {method}: nll(theta_hat) {nll_hat:.2}  nll(truth) {nll_true:.2}  nll(polish-from-truth) {nll_ft:.2} err {err_ft:.4}");
                println!("  theta_hat  {:?}", last.theta_hat.values());
                println!("  theta_true {:?}", cfg.theta_true.values());
            }
        }
        let red = 100.0 * (finals[1] - finals[0]) / finals[1];
        reductions.push(red);
        println!("{line} reduction {red:.1}%");
    }
    reductions.sort_by(f64::total_cmp);
    println!("median reduction {:.1}%  total {:?}", reductions[reductions.len() / 2], t_all.elapsed());
}
