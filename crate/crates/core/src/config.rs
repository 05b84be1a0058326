//! Campaign configuration files.
//!
//! TOML with nested sections mirroring [`CampaignConfig`]; unknown keys are
//! rejected. Parameter vectors are given in the system's label order
//! (arm: I1, I2, I3, l1, l2, l3; block: m, h_x, h_z).

use crate::campaign::{CampaignConfig, Method};
use crate::contact::ContactConfig;
use crate::design::DesignConfig;
use crate::error::{Result, SimError};
use crate::estimator::FitOptions;
use crate::mech::{ParamSpace, ParamVector, SystemKind, SystemModel};
use crate::sensors::{MeasurementModel, SensorKind};
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    system: SystemSection,
    parameters: ParameterSection,
    sensor: SensorSection,
    contact: ContactConfig,
    design: DesignConfig,
    estimator: FitOptions,
    campaign: CampaignSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemSection {
    kind: SystemKind,
    gravity: f64,
    dt: f64,
    #[serde(default)]
    base_height: f64,
    #[serde(default = "default_link_masses")]
    link_masses: [f64; 3],
}

fn default_link_masses() -> [f64; 3] {
    [1.0, 1.0, 1.0]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParameterSection {
    theta_true: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SensorSection {
    kind: SensorKind,
    /// Noise standard deviation per measurement component.
    sigma: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CampaignSection {
    horizon: usize,
    experiment_count: usize,
    method: Method,
    seed: u64,
    out_dir: PathBuf,
    #[serde(default)]
    dump_trajectories: bool,
}

/// Parse a configuration file body into a validated [`CampaignConfig`].
pub fn parse_config(text: &str) -> Result<CampaignConfig> {
    let file: ConfigFile =
        toml::from_str(text).map_err(|e| SimError::Config(format!("config parse: {e}")))?;
    let system = SystemModel::new(
        file.system.kind,
        file.system.gravity,
        file.system.dt,
        file.system.base_height,
        file.system.link_masses,
    )?;
    let theta_true = ParamVector::for_system(system.kind, file.parameters.theta_true)?;
    let param_space = ParamSpace::new(
        ParamVector::for_system(system.kind, file.parameters.lower)?,
        ParamVector::for_system(system.kind, file.parameters.upper)?,
    )?;
    let sensor = MeasurementModel::isotropic(file.sensor.kind, file.sensor.sigma, &system)?;
    let cfg = CampaignConfig {
        system,
        horizon: file.campaign.horizon,
        theta_true,
        param_space,
        sensor,
        contact: file.contact,
        design: file.design,
        estimator: file.estimator,
        experiment_count: file.campaign.experiment_count,
        method: file.campaign.method,
        seed: file.campaign.seed,
        out_dir: file.campaign.out_dir,
        dump_trajectories: file.campaign.dump_trajectories,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<CampaignConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    parse_config(&text)
}
