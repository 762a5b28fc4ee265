//! Synthetic beacon scans from a log-distance path-loss model.
//!
//! A [`World`] holds one [`SiteLayout`] per synthetic location: access points
//! scattered over a square floor plus two collection sites, one where
//! co-located device pairs are scanned and one where separated pairs are.
//! Sessions place a device pair around the scenario's site and read every AP
//! within detection range.

mod pathloss;
mod session;
mod world;

use thiserror::Error;

pub use pathloss::{rssi_at_distance, PathLossConfig};
pub use session::{
    generate_dataset, generate_dataset_rows, generate_session, try_generate_session,
    DatasetSize, DeviceIds, Scenario, ScenarioBounds, Session, SimulationManifest, MANIFEST_FORMAT,
};
pub use world::{AccessPoint, EnvironmentConfig, Point, SiteLayout, World};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("distance must be positive, got {0} m")]
    NonPositiveDistance(f64),
    #[error("a device sees no access point")]
    NoVisibleAp,
    #[error("configuration error: {0}")]
    Configuration(String),
}

impl SimError {
    pub fn code(&self) -> &'static str {
        match self {
            SimError::NonPositiveDistance(_) => "NonPositiveDistance",
            SimError::NoVisibleAp => "NoVisibleAp",
            SimError::Configuration(_) => "ConfigurationError",
        }
    }
}
