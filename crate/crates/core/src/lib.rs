//! Differentiable planar contact simulation with information-maximizing
//! experiment design and maximum-likelihood parameter estimation.
//!
//! The toolkit simulates two planar mechanisms (a three-link arm and a free
//! block) with smoothed contact against a flat surface, carries forward-mode
//! parameter sensitivities through entire rollouts, designs experiments that
//! maximize the trace of the predicted Fisher information, and estimates
//! unknown inertial/kinematic parameters from noisy sensor data.

pub mod campaign;
pub mod config;
pub mod contact;
pub mod design;
pub mod error;
pub mod estimator;
pub mod fisher;
pub mod linalg;
pub mod mech;
pub mod optim;
pub mod rng;
pub mod sensitivity;
pub mod sensors;

pub use campaign::{
    compare_methods, emit_results, run_campaign, CampaignConfig, CampaignOutcome,
    ComparisonReport, ExperimentRecord, Method,
};
pub use contact::{complementarity_residual, solve_contact, ContactConfig, ContactPoint, ContactSet};
pub use design::{design_experiment, design_objective, random_design, DesignConfig, DesignVariables};
pub use error::{Result, SimError};
pub use estimator::{fit_mle, neg_log_likelihood, param_error, Dataset, Experiment, FitOptions};
pub use fisher::{
    accumulate, empirical_fim, predicted_fim, trace_objective, trajectory_scores, FisherMatrix,
};
pub use mech::{
    bias, contact_kinematics, mass_matrix, rollout, sensor_jacobian, step, ParamSpace, ParamVector,
    State, SystemKind, SystemModel, Trajectory,
};
pub use optim::AdamConfig;
pub use sensitivity::{
    check_gradient, lift_constant, lift_variable, Dual, Scalar, ScalarField, SensitivityContext,
};
pub use sensors::{
    accelerometer, contact_force_sensor, log_likelihood, simulate_measurement, MeasurementModel,
    SensorKind, SensorReading,
};
