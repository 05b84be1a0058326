//! Shared fixtures for integration tests.

#![allow(dead_code)]

use paramprobe::{ContactConfig, ParamSpace, ParamVector, SystemKind, SystemModel};

pub fn arm_system() -> SystemModel {
    SystemModel::new(SystemKind::ThreeLinkArm, 9.81, 0.01, 0.55, [1.0, 1.0, 1.0]).unwrap()
}

pub fn block_system() -> SystemModel {
    SystemModel::new(SystemKind::PlanarBlock, 9.81, 0.01, 0.0, [1.0, 1.0, 1.0]).unwrap()
}

/// Rod-consistent inertias +20%, lengths (0.5, 0.4, 0.3).
pub fn arm_truth() -> ParamVector {
    ParamVector::arm([0.025, 0.016, 0.009], [0.5, 0.4, 0.3]).unwrap()
}

pub fn block_truth() -> ParamVector {
    ParamVector::block(1.2, 0.12, 0.08).unwrap()
}

pub fn arm_space() -> ParamSpace {
    ParamSpace::new(
        ParamVector::arm([0.005, 0.005, 0.003], [0.2, 0.15, 0.1]).unwrap(),
        ParamVector::arm([0.06, 0.05, 0.03], [0.8, 0.7, 0.6]).unwrap(),
    )
    .unwrap()
}

pub fn block_space() -> ParamSpace {
    ParamSpace::new(
        ParamVector::block(0.5, 0.05, 0.03).unwrap(),
        ParamVector::block(2.5, 0.25, 0.2).unwrap(),
    )
    .unwrap()
}

pub fn contact_cfg() -> ContactConfig {
    ContactConfig::default()
}
