//! Accuracy-driven round planning for federated training.
//!
//! Two bootstrap rounds run a fixed epoch count. Every later round gets a target accuracy on a
//! linear or concave quadratic trajectory ending at the accuracy constraint, and the epoch
//! count is extrapolated from the two most recent monitored rounds. The model being trained is
//! a synthetic learning curve.

mod config;
mod estimator;
mod oracle;
mod runner;
mod trajectory;

pub use config::{FederationConfig, MonitoredAccuracy, Trajectory};
pub use estimator::{estimate_epochs, RoundState, MIN_SLOPE};
pub use oracle::{simulate_round, LearningCurveOracle, RoundAccuracy};
pub(crate) use runner::run_federation_logged;
pub use runner::{run_federation, FederationLog, FederationSimulation};
pub use trajectory::target_accuracy;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FedError {
    #[error("round {r} outside the planned range {first}..={last}")]
    RoundOutOfRange { r: u32, first: u32, last: u32 },
}
