//! End-to-end experiment campaigns: design, execute on ground truth,
//! estimate, repeat; plus result persistence and method comparison.
//!
//! Both campaign arms (information-maximizing and uniform-random design)
//! consume identical measurement-noise streams per experiment index, so the
//! comparison isolates the design effect.

use crate::contact::ContactConfig;
use crate::design::{design_experiment, random_design, DesignConfig, DesignVariables};
use crate::error::{Result, SimError};
use crate::estimator::{fit_mle, param_error, Dataset, Experiment, FitOptions};
use crate::fisher::{accumulate, empirical_fim, trajectory_scores, FisherMatrix};
use crate::mech::{
    rollout, ParamSpace, ParamVector, SystemModel, Trajectory,
};
use crate::rng::{substream, tag};
use crate::sensors::{simulate_measurement, MeasurementModel, SensorReading};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Normal-force level above which a step counts as a contact step in
/// campaign records.
const CONTACT_STEP_FORCE: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "fisher")]
    Fisher,
    #[serde(rename = "random")]
    Random,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Fisher => write!(f, "fisher"),
            Method::Random => write!(f, "random"),
        }
    }
}

impl FromStr for Method {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fisher" => Ok(Method::Fisher),
            "random" => Ok(Method::Random),
            other => Err(SimError::Config(format!(
                "unknown method {other:?}; expected fisher or random"
            ))),
        }
    }
}

/// Everything one campaign run needs.
#[derive(Clone, Debug)]
pub struct CampaignConfig {
    pub system: SystemModel,
    pub horizon: usize,
    pub theta_true: ParamVector,
    pub param_space: ParamSpace,
    pub sensor: MeasurementModel,
    pub contact: ContactConfig,
    pub design: DesignConfig,
    pub estimator: FitOptions,
    pub experiment_count: usize,
    pub method: Method,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub dump_trajectories: bool,
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(SimError::Config("horizon must be >= 1".into()));
        }
        if self.experiment_count < 1 {
            return Err(SimError::Config("experiment_count must be >= 1".into()));
        }
        if self.theta_true.dim() != self.system.kind.param_dim() {
            return Err(SimError::Config("theta_true dimension does not match the system".into()));
        }
        if !self.param_space.contains(&self.theta_true) {
            return Err(SimError::Config("theta_true outside the feasible parameter box".into()));
        }
        self.contact.validate()?;
        self.design.validate()?;
        self.estimator.validate()?;
        Ok(())
    }
}

/// One row of the campaign log.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentRecord {
    /// 1-based experiment index.
    pub index: usize,
    pub design: DesignVariables,
    /// Steps whose peak normal force exceeded the contact threshold.
    pub contact_steps: usize,
    pub max_normal_force: f64,
    /// Empirical information gathered by this experiment (trace).
    pub fim_trace: f64,
    /// Running sum of per-experiment information traces.
    pub cum_fim_trace: f64,
    pub theta_hat: ParamVector,
    pub param_error: f64,
}

/// Full campaign output; `failure` is set when a stage aborted the loop and
/// the records are partial.
#[derive(Clone, Debug)]
pub struct CampaignOutcome {
    pub records: Vec<ExperimentRecord>,
    pub dataset: Dataset,
    pub trajectories: Vec<Trajectory>,
    pub failure: Option<String>,
}

/// Run the design -> execute -> estimate loop for `experiment_count`
/// experiments. Deterministic given the config.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignOutcome> {
    cfg.validate()?;
    let sys = &cfg.system;
    // design information is measured in box-normalized parameter coordinates
    let box_widths: Vec<f64> = cfg
        .param_space
        .upper()
        .values()
        .iter()
        .zip(cfg.param_space.lower().values())
        .map(|(u, l)| u - l)
        .collect();
    let mut theta_hat = cfg.param_space.midpoint();
    let mut dataset = Dataset::default();
    let mut records = Vec::new();
    let mut trajectories = Vec::new();
    let mut cum_fim = FisherMatrix::zero(cfg.theta_true.dim());
    let mut previous_design: Option<DesignVariables> = None;
    let mut failure = None;

    for k in 1..=cfg.experiment_count {
        // Sequential reweighting: the design objective is weighted by the
        // current posterior covariance (box widths as the prior scale, shrunk
        // by the information banked so far), which makes the weighted trace
        // the first-order reduction of the summed posterior variances in raw
        // parameter units, the quantity the campaign error metric scores.
        // Successive designs thereby keep probing the directions, including
        // correlated sloppy combinations, that the data has not yet
        // constrained.
        let design_cfg = DesignConfig {
            param_weights: Some(posterior_covariance(&box_widths, &cum_fim)),
            ..cfg.design.clone()
        };
        let stage = (|| -> Result<ExperimentRecord> {
            // 1. design
            let design = match cfg.method {
                Method::Fisher => design_experiment(
                    &theta_hat,
                    sys,
                    &cfg.sensor,
                    &cfg.contact,
                    &design_cfg,
                    cfg.horizon,
                    splitmix_tag(cfg.seed, k as u64),
                    previous_design.as_ref(),
                )?,
                Method::Random => {
                    let mut rng = substream(cfg.seed, &[tag::RANDOM_DESIGN, k as u64]);
                    random_design(&design_cfg, sys.kind, cfg.horizon, &mut rng)
                }
            };
            // 2. execute on ground truth, with method-independent noise
            let x0 = design.initial_state(sys);
            let controls = design.controls(cfg.horizon);
            let traj = rollout(&x0, &controls, &cfg.theta_true, sys, &cfg.contact)?;
            let readings = synthesize_readings(&traj, cfg, k)?;
            dataset.push(Experiment {
                design: design.clone(),
                x0,
                readings: readings.clone(),
            });
            // 3. fit on all data so far, warm-started
            theta_hat = fit_mle(
                &dataset,
                &theta_hat,
                &cfg.param_space,
                sys,
                &cfg.sensor,
                &cfg.contact,
                &cfg.estimator,
                cfg.seed,
            )?;
            // 4. record
            let y_vecs: Vec<Vec<f64>> = readings.iter().map(|r| r.y.clone()).collect();
            let scores =
                trajectory_scores(&traj, &y_vecs, &theta_hat, &cfg.sensor, sys, &cfg.contact)?;
            let fim = empirical_fim(&scores)?;
            cum_fim = accumulate(&cum_fim, &fim)?;
            let contact_steps = traj
                .contacts
                .iter()
                .filter(|c| c.max_normal() > CONTACT_STEP_FORCE)
                .count();
            let max_normal_force = traj
                .contacts
                .iter()
                .map(|c| c.max_normal())
                .fold(0.0, f64::max);
            let record = ExperimentRecord {
                index: k,
                design: design.clone(),
                contact_steps,
                max_normal_force,
                fim_trace: fim.trace(),
                cum_fim_trace: cum_fim.trace(),
                theta_hat: theta_hat.clone(),
                param_error: param_error(&theta_hat, &cfg.theta_true)?,
            };
            previous_design = Some(design);
            trajectories.push(traj);
            Ok(record)
        })();
        match stage {
            Ok(record) => records.push(record),
            Err(e) => {
                failure = Some(format!("experiment {k}: {e}"));
                break;
            }
        }
    }
    Ok(CampaignOutcome {
        records,
        dataset,
        trajectories,
        failure,
    })
}

/// Row-major inverse of `diag(1 / widths^2) + fim`: the posterior covariance
/// under a unit-information-per-box-width prior.
fn posterior_covariance(widths: &[f64], fim: &FisherMatrix) -> Vec<f64> {
    let d = widths.len();
    let mut a = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            a[i * d + j] = fim.get(i, j);
        }
        a[i * d + i] += 1.0 / (widths[i] * widths[i]);
    }
    let mut cov = vec![0.0; d * d];
    for j in 0..d {
        let mut col = vec![0.0; d];
        col[j] = 1.0;
        let mut m = a.clone();
        crate::linalg::chol_solve_spd(d, &mut m, &mut col);
        for i in 0..d {
            cov[i * d + j] = col[i];
        }
    }
    cov
}

fn splitmix_tag(seed: u64, k: u64) -> u64 {
    // design solves get their own per-experiment seed domain
    seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(k)
}

/// Noisy readings for a ground-truth trajectory; the noise stream depends on
/// (seed, experiment index) only, never on the design method.
fn synthesize_readings(
    traj: &Trajectory,
    cfg: &CampaignConfig,
    k: usize,
) -> Result<Vec<SensorReading>> {
    let means = crate::sensors::trajectory_means(traj, &cfg.theta_true, &cfg.sensor, &cfg.system, &cfg.contact)?;
    let mut rng = substream(cfg.seed, &[tag::MEASUREMENT_NOISE, k as u64]);
    means
        .iter()
        .enumerate()
        .map(|(i, g)| simulate_measurement(g, &cfg.sensor, i, &mut rng))
        .collect()
}

/// Final-error reduction and cumulative-information ratio between two arms.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// `100 * (err_random - err_fisher) / err_random`; `None` when the
    /// random arm's final error is zero (undefined).
    pub error_reduction_pct: Option<f64>,
    /// Fisher / random cumulative information trace at the final experiment.
    pub info_ratio: f64,
}

pub fn compare_methods(
    fisher: &[ExperimentRecord],
    random: &[ExperimentRecord],
) -> Result<ComparisonReport> {
    if fisher.len() != random.len() || fisher.is_empty() {
        return Err(SimError::Config(format!(
            "comparison needs equal nonempty record counts, got {} and {}",
            fisher.len(),
            random.len()
        )));
    }
    let ef = fisher.last().unwrap().param_error;
    let er = random.last().unwrap().param_error;
    let error_reduction_pct = if er == 0.0 {
        None
    } else {
        Some(100.0 * (er - ef) / er)
    };
    Ok(ComparisonReport {
        error_reduction_pct,
        info_ratio: fisher.last().unwrap().cum_fim_trace / random.last().unwrap().cum_fim_trace,
    })
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

/// Lossless decimal formatting of binary64 (17 significant digits).
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(|e| SimError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| SimError::io(&tmp, e))?;
    f.sync_all().map_err(|e| SimError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| SimError::io(path, e))?;
    Ok(())
}

pub fn records_to_csv(records: &[ExperimentRecord], method: Method, seed: u64) -> String {
    let mut out = String::from(
        "index,method,seed,param_error,fim_trace,cum_fim_trace,contact_steps,max_normal_force\n",
    );
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.index,
            method,
            seed,
            format_f64(r.param_error),
            format_f64(r.fim_trace),
            format_f64(r.cum_fim_trace),
            r.contact_steps,
            format_f64(r.max_normal_force),
        ));
    }
    out
}

/// Parsed row of a campaign CSV (used by the compare subcommand).
#[derive(Clone, Debug)]
pub struct CsvRecord {
    pub index: usize,
    pub method: String,
    pub seed: u64,
    pub param_error: f64,
    pub cum_fim_trace: f64,
}

pub fn read_campaign_csv(path: &Path) -> Result<Vec<CsvRecord>> {
    let text = fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| SimError::Config(format!("{}: empty CSV", path.display())))?;
    if !header.starts_with("index,method,seed,param_error") {
        return Err(SimError::Config(format!(
            "{}: unrecognized campaign CSV header",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 8 {
            return Err(SimError::Config(format!(
                "{}: line {} has {} columns, expected 8",
                path.display(),
                n + 2,
                cols.len()
            )));
        }
        let parse_f = |s: &str, what: &str| -> Result<f64> {
            s.parse().map_err(|_| {
                SimError::Config(format!("{}: bad {what} value {s:?}", path.display()))
            })
        };
        rows.push(CsvRecord {
            index: cols[0]
                .parse()
                .map_err(|_| SimError::Config(format!("{}: bad index {:?}", path.display(), cols[0])))?,
            method: cols[1].to_string(),
            seed: cols[2]
                .parse()
                .map_err(|_| SimError::Config(format!("{}: bad seed {:?}", path.display(), cols[2])))?,
            param_error: parse_f(cols[3], "param_error")?,
            cum_fim_trace: parse_f(cols[5], "cum_fim_trace")?,
        });
    }
    Ok(rows)
}

/// Per-step trajectory dump.
#[derive(Serialize)]
struct TrajectoryDump<'a> {
    q: Vec<[f64; 3]>,
    qdot: Vec<[f64; 3]>,
    u: &'a [[f64; 3]],
    lambda: Vec<Vec<[f64; 2]>>,
    y: Vec<&'a [f64]>,
}

fn theta_json(theta: &ParamVector) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    for (l, v) in theta.labels().iter().zip(theta.values()) {
        map.insert(l.clone(), serde_json::json!(v));
    }
    serde_json::Value::Object(map)
}

/// Write campaign.csv, estimate.json, dataset.json and (on request)
/// trajectory_<k>.json under the configured output directory.
pub fn emit_results(outcome: &CampaignOutcome, cfg: &CampaignConfig) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| SimError::io(&cfg.out_dir, e))?;
    let mut written = Vec::new();

    let csv_path = cfg.out_dir.join("campaign.csv");
    atomic_write(
        &csv_path,
        records_to_csv(&outcome.records, cfg.method, cfg.seed).as_bytes(),
    )?;
    written.push(csv_path);

    if let Some(last) = outcome.records.last() {
        let est_path = cfg.out_dir.join("estimate.json");
        let body = serde_json::to_string_pretty(&serde_json::json!({
            "theta_hat": theta_json(&last.theta_hat),
            "param_error": last.param_error,
            "experiments": last.index,
            "method": cfg.method.to_string(),
            "seed": cfg.seed,
        }))
        .expect("estimate serializes");
        atomic_write(&est_path, body.as_bytes())?;
        written.push(est_path);
    }

    let data_path = cfg.out_dir.join("dataset.json");
    let body = serde_json::to_string(&outcome.dataset).expect("dataset serializes");
    atomic_write(&data_path, body.as_bytes())?;
    written.push(data_path);

    if cfg.dump_trajectories {
        for (i, (traj, exp)) in outcome
            .trajectories
            .iter()
            .zip(&outcome.dataset.experiments)
            .enumerate()
        {
            let dump = TrajectoryDump {
                q: traj.states.iter().map(|s| s.q).collect(),
                qdot: traj.states.iter().map(|s| s.qdot).collect(),
                u: &traj.controls,
                lambda: traj
                    .contacts
                    .iter()
                    .map(|c| c.points.iter().map(|p| [p.tangential, p.normal]).collect())
                    .collect(),
                y: exp.readings.iter().map(|r| r.y.as_slice()).collect(),
            };
            let path = cfg.out_dir.join(format!("trajectory_{}.json", i + 1));
            atomic_write(
                &path,
                serde_json::to_string(&dump).expect("trajectory serializes").as_bytes(),
            )?;
            written.push(path);
        }
    }
    Ok(written)
}
