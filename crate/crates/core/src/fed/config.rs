use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum Trajectory {
    Linear,
    /// Concave: large early targets, flattening towards the last round.
    Quadratic,
}

impl std::str::FromStr for Trajectory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(Trajectory::Linear),
            "quadratic" => Ok(Trajectory::Quadratic),
            other => Err(format!("unknown trajectory {other:?} (expected linear or quadratic)")),
        }
    }
}

/// Which measured accuracy the epoch estimator tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum MonitoredAccuracy {
    /// Validation-set accuracy.
    Fit,
    /// Held-out accuracy, the one the constraint is judged on.
    #[default]
    Eval,
}

fn default_rounds() -> u32 {
    10
}
fn one() -> u32 {
    1
}
fn default_e_max() -> u32 {
    16
}
fn default_nodes() -> u32 {
    1
}
fn default_headroom() -> f64 {
    0.01
}
fn default_epoch_time() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct FederationConfig {
    /// Total number of rounds; the first two bootstrap the estimator.
    #[serde(default = "default_rounds")]
    pub rounds: u32,
    /// Accuracy the final round must reach.
    pub ac_sla: f64,
    pub trajectory: Trajectory,
    #[serde(default = "one")]
    pub e_bootstrap: u32,
    #[serde(default = "default_e_max")]
    pub e_max: u32,
    #[serde(default = "default_nodes")]
    pub node_count: u32,
    #[serde(default)]
    pub monitor: MonitoredAccuracy,
    /// Margin added to the trajectory target when sizing a round.
    #[serde(default = "default_headroom")]
    pub accuracy_headroom: f64,
    /// Simulated seconds per local epoch.
    #[serde(default = "default_epoch_time")]
    pub epoch_time: f64,
    /// Fixed synchronization cost at the end of each round, in seconds.
    #[serde(default)]
    pub aggregation_delay: f64,
}

impl FederationConfig {
    pub fn new(rounds: u32, ac_sla: f64, trajectory: Trajectory) -> Self {
        FederationConfig {
            rounds,
            ac_sla,
            trajectory,
            e_bootstrap: 1,
            e_max: default_e_max(),
            node_count: 1,
            monitor: MonitoredAccuracy::Eval,
            accuracy_headroom: default_headroom(),
            epoch_time: 1.0,
            aggregation_delay: 0.0,
        }
    }

    /// Returns `(field, requirement)` for the first violated constraint.
    pub fn validate(&self) -> Result<(), (&'static str, &'static str)> {
        if self.rounds < 3 {
            return Err(("rounds", "at least 3"));
        }
        if !(self.ac_sla > 0.0 && self.ac_sla < 1.0) {
            return Err(("ac_sla", "strictly between 0 and 1"));
        }
        if self.e_bootstrap < 1 {
            return Err(("e_bootstrap", "at least 1"));
        }
        if self.e_max < 1 {
            return Err(("e_max", "at least 1"));
        }
        if self.node_count < 1 {
            return Err(("node_count", "at least 1"));
        }
        if !(self.accuracy_headroom.is_finite() && self.accuracy_headroom >= 0.0) {
            return Err(("accuracy_headroom", "non-negative"));
        }
        if !(self.epoch_time.is_finite() && self.epoch_time > 0.0) {
            return Err(("epoch_time", "positive"));
        }
        if !(self.aggregation_delay.is_finite() && self.aggregation_delay >= 0.0) {
            return Err(("aggregation_delay", "non-negative"));
        }
        Ok(())
    }
}
