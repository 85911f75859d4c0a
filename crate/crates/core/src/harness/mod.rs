//! Scripted fault-injection simulation.
//!
//! A [`Scenario`] drives the operating-scenario timeline, event injections,
//! debounce, noise and a kinematic vehicle. [`run_campaign`] ticks a
//! compiled supervisor through each scenario and summarizes detection in a
//! confusion matrix and mean latencies.

pub mod bundled;
mod campaign;
mod provider;
mod scenario;
mod vehicle;

use thiserror::Error;

use crate::runtime::RuntimeError;

pub use campaign::{
    latency_stats, run_campaign, run_campaign_detailed, run_scenario, CampaignReport, ConfusionMatrix, InjectionOutcome,
    ScenarioRun, FALSE_NEGATIVE_LATENCY_S,
};
pub use provider::{debounced_provider, DebouncedProvider};
pub use scenario::{default_caps, load_scenario, Debounce, DriveMode, Injection, Noise, OsSwitch, Scenario, VehicleConfig};
pub use vehicle::{vehicle_executor, VehicleExecutor, VehicleState, EMERGENCY_STOP};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("scenario JSON at `{path}`: {message}")]
    Json { path: String, message: String },
    #[error("scenario field `{path}`: {message}")]
    Invalid { path: String, message: String },
    #[error("scenario `{scenario}` targets item `{found}` but the supervisor is for `{expected}`")]
    ItemMismatch {
        scenario: String,
        expected: String,
        found: String,
    },
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
}

impl HarnessError {
    /// Malformed or invalid scenario input, as opposed to a failure while
    /// running it.
    pub fn is_input(&self) -> bool {
        matches!(self, HarnessError::Json { .. } | HarnessError::Invalid { .. })
    }
}
