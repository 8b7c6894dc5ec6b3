use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::arrivals::ArrivalSpec;
use crate::batch::{BatchJob, JobError};
use crate::fed::{FederationConfig, LearningCurveOracle, MonitoredAccuracy, Trajectory};
use crate::serve::InferenceService;
use crate::sim::NodeSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Batch,
    Federation,
    Serving,
}

impl ScenarioKind {
    pub fn policy_ids(self) -> &'static [&'static str] {
        match self {
            ScenarioKind::Batch => &["fifo", "edf", "proportional"],
            ScenarioKind::Federation => &["linear", "quadratic"],
            ScenarioKind::Serving => &["roma", "rules"],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Batch => "batch",
            ScenarioKind::Federation => "federation",
            ScenarioKind::Serving => "serving",
        }
    }
}

fn d_period() -> f64 {
    1.0
}
fn d_duration() -> f64 {
    3600.0
}
fn d_kp() -> f64 {
    2.0
}
fn d_ki() -> f64 {
    0.5
}
fn d_cmax() -> f64 {
    4.0
}
fn d_setpoint() -> f64 {
    0.8
}
fn d_control_window() -> f64 {
    2.0
}
fn d_true() -> bool {
    true
}
fn d_half() -> f64 {
    0.5
}
fn d_rules_window() -> f64 {
    10.0
}
fn d_drain() -> f64 {
    60.0
}

/// Policy id plus every tunable; fields that do not apply to the scenario kind are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    /// batch: fifo | edf | proportional; federation: linear | quadratic; serving: roma | rules.
    pub id: String,
    #[serde(default = "d_kp")]
    pub kp: f64,
    #[serde(default = "d_ki")]
    pub ki: f64,
    /// Controller output floor; batch default 0, serving default 0.25 cores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_min: Option<f64>,
    #[serde(default = "d_cmax")]
    pub cores_per_executor_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_executors_per_stage: Option<usize>,
    #[serde(default)]
    pub profiling_error: f64,
    #[serde(default = "d_setpoint")]
    pub setpoint_fraction: f64,
    #[serde(default = "d_control_window")]
    pub control_window: f64,
    #[serde(default = "d_true")]
    pub service_floor: bool,
    #[serde(default = "d_half")]
    pub rules_step: f64,
    #[serde(default = "d_half")]
    pub rules_floor: f64,
    #[serde(default = "d_rules_window")]
    pub rules_window: f64,
}

impl PolicyConfig {
    pub fn new(id: impl Into<String>) -> Self {
        PolicyConfig {
            id: id.into(),
            kp: d_kp(),
            ki: d_ki(),
            u_min: None,
            cores_per_executor_max: d_cmax(),
            max_executors_per_stage: None,
            profiling_error: 0.0,
            setpoint_fraction: d_setpoint(),
            control_window: d_control_window(),
            service_floor: true,
            rules_step: d_half(),
            rules_floor: d_half(),
            rules_window: d_rules_window(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct BatchWorkload {
    pub jobs: Vec<BatchJob>,
}

fn d_rounds() -> u32 {
    10
}
fn d_one() -> u32 {
    1
}
fn d_e_max() -> u32 {
    16
}
fn d_headroom() -> f64 {
    0.01
}
fn d_epoch() -> f64 {
    1.0
}

/// Federation settings; the trajectory comes from the policy id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct FederationWorkload {
    #[serde(default = "d_rounds")]
    pub rounds: u32,
    pub ac_sla: f64,
    #[serde(default = "d_one")]
    pub e_bootstrap: u32,
    #[serde(default = "d_e_max")]
    pub e_max: u32,
    #[serde(default = "d_one")]
    pub node_count: u32,
    #[serde(default)]
    pub monitor: MonitoredAccuracy,
    #[serde(default = "d_headroom")]
    pub accuracy_headroom: f64,
    #[serde(default = "d_epoch")]
    pub epoch_time: f64,
    #[serde(default)]
    pub aggregation_delay: f64,
    pub oracle: LearningCurveOracle,
}

impl FederationWorkload {
    pub fn config(&self, trajectory: Trajectory) -> FederationConfig {
        FederationConfig {
            rounds: self.rounds,
            ac_sla: self.ac_sla,
            trajectory,
            e_bootstrap: self.e_bootstrap,
            e_max: self.e_max,
            node_count: self.node_count,
            monitor: self.monitor,
            accuracy_headroom: self.accuracy_headroom,
            epoch_time: self.epoch_time,
            aggregation_delay: self.aggregation_delay,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ServingWorkload {
    pub services: Vec<InferenceService>,
    /// One generator per service, in service order. Traces cover `[0, duration)`.
    pub arrivals: Vec<ArrivalSpec>,
    #[serde(default)]
    pub routing_latency: f64,
    /// Extra simulated time after `duration` for queued requests to finish.
    #[serde(default = "d_drain")]
    pub drain: f64,
}

/// One experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    #[serde(default)]
    pub seed: u64,
    /// Simulated horizon in seconds.
    #[serde(default = "d_duration")]
    pub duration: f64,
    #[serde(default = "d_period")]
    pub control_period: f64,
    #[serde(default)]
    pub cluster: Vec<NodeSpec>,
    pub policy: PolicyConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch: Option<BatchWorkload>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub federation: Option<FederationWorkload>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub serving: Option<ServingWorkload>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation {
        field: field.into(),
        message: message.into(),
    }
}

fn must(field: &str, ok: bool, what: &str) -> Result<(), ScenarioError> {
    if ok {
        Ok(())
    } else {
        Err(invalid(field, format!("must be {what}")))
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String, ScenarioError> {
        toml::to_string_pretty(self).map_err(|e| ScenarioError::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let ids = self.kind.policy_ids();
        if !ids.contains(&self.policy.id.as_str()) {
            return Err(invalid(
                "policy.id",
                format!(
                    "unknown policy {:?} for {} scenarios (valid: {})",
                    self.policy.id,
                    self.kind.as_str(),
                    ids.join(", ")
                ),
            ));
        }
        must("seed", i64::try_from(self.seed).is_ok(), "at most 2^63 - 1")?;
        must("duration", self.duration.is_finite() && self.duration > 0.0, "positive")?;
        must(
            "control_period",
            self.control_period.is_finite() && self.control_period > 0.0,
            "positive",
        )?;
        self.validate_policy()?;
        for (i, n) in self.cluster.iter().enumerate() {
            n.validate()
                .map_err(|f| invalid(format!("cluster[{i}].{f}"), "must be positive"))?;
        }
        let sections = [
            ("batch", self.batch.is_some(), ScenarioKind::Batch),
            ("federation", self.federation.is_some(), ScenarioKind::Federation),
            ("serving", self.serving.is_some(), ScenarioKind::Serving),
        ];
        for (name, present, kind) in sections {
            if present && kind != self.kind {
                return Err(invalid(
                    name,
                    format!("section not allowed in a {} scenario", self.kind.as_str()),
                ));
            }
            if !present && kind == self.kind {
                return Err(invalid(name, "section is required"));
            }
        }
        if self.kind != ScenarioKind::Federation && self.cluster.is_empty() {
            return Err(invalid("cluster", "at least one node is required"));
        }
        if let Some(b) = &self.batch {
            self.validate_batch(b)?;
        }
        if let Some(f) = &self.federation {
            f.config(Trajectory::Linear)
                .validate()
                .map_err(|(field, what)| invalid(format!("federation.{field}"), format!("must be {what}")))?;
            f.oracle
                .validate()
                .map_err(|(field, what)| invalid(format!("federation.oracle.{field}"), format!("must be {what}")))?;
        }
        if let Some(s) = &self.serving {
            self.validate_serving(s)?;
        }
        Ok(())
    }

    fn validate_policy(&self) -> Result<(), ScenarioError> {
        let p = &self.policy;
        must("policy.kp", p.kp.is_finite() && p.kp >= 0.0, "non-negative")?;
        must("policy.ki", p.ki.is_finite() && p.ki >= 0.0, "non-negative")?;
        if let Some(u) = p.u_min {
            must("policy.u_min", u.is_finite() && u >= 0.0, "non-negative")?;
        }
        must(
            "policy.cores_per_executor_max",
            p.cores_per_executor_max.is_finite() && p.cores_per_executor_max > 0.0,
            "positive",
        )?;
        if let Some(m) = p.max_executors_per_stage {
            must("policy.max_executors_per_stage", m > 0, "at least 1")?;
        }
        must(
            "policy.profiling_error",
            p.profiling_error.is_finite() && p.profiling_error > -1.0,
            "greater than -1",
        )?;
        must(
            "policy.setpoint_fraction",
            p.setpoint_fraction > 0.0 && p.setpoint_fraction <= 1.0,
            "in (0, 1]",
        )?;
        must(
            "policy.control_window",
            p.control_window.is_finite() && p.control_window > 0.0,
            "positive",
        )?;
        must(
            "policy.rules_step",
            p.rules_step.is_finite() && p.rules_step > 0.0,
            "positive",
        )?;
        must(
            "policy.rules_floor",
            p.rules_floor.is_finite() && p.rules_floor >= 0.0,
            "non-negative",
        )?;
        must(
            "policy.rules_window",
            p.rules_window.is_finite() && p.rules_window > 0.0,
            "positive",
        )
    }

    fn validate_batch(&self, b: &BatchWorkload) -> Result<(), ScenarioError> {
        for (i, job) in b.jobs.iter().enumerate() {
            job.validate().map_err(|e| match e {
                JobError::Field { field, what, .. } => {
                    invalid(format!("batch.jobs[{i}].{field}"), format!("must be {what}"))
                }
                other => invalid(format!("batch.jobs[{i}]"), other.to_string()),
            })?;
        }
        let mut seen = std::collections::BTreeSet::new();
        for (i, job) in b.jobs.iter().enumerate() {
            if !seen.insert(job.id.as_str()) {
                return Err(invalid(
                    format!("batch.jobs[{i}].id"),
                    format!("duplicate job id {:?}", job.id),
                ));
            }
        }
        Ok(())
    }

    fn validate_serving(&self, s: &ServingWorkload) -> Result<(), ScenarioError> {
        if s.services.is_empty() {
            return Err(invalid("serving.services", "at least one service is required"));
        }
        for (i, svc) in s.services.iter().enumerate() {
            svc.validate().map_err(|(field, what)| {
                invalid(format!("serving.services[{i}].{field}"), format!("must be {what}"))
            })?;
        }
        if s.arrivals.len() != s.services.len() {
            return Err(invalid(
                "serving.arrivals",
                format!(
                    "expected one generator per service ({}), got {}",
                    s.services.len(),
                    s.arrivals.len()
                ),
            ));
        }
        for (i, a) in s.arrivals.iter().enumerate() {
            a.validate().map_err(|(field, what)| {
                invalid(format!("serving.arrivals[{i}].{field}"), format!("must be {what}"))
            })?;
        }
        must(
            "serving.routing_latency",
            s.routing_latency.is_finite() && s.routing_latency >= 0.0,
            "non-negative",
        )?;
        must("serving.drain", s.drain.is_finite() && s.drain >= 0.0, "non-negative")
    }

    /// Replaces the policy id; the result is validated.
    pub fn with_policy(&self, id: &str) -> Result<Self, ScenarioError> {
        let mut c = self.clone();
        c.policy.id = id.to_string();
        c.validate()?;
        Ok(c)
    }
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ScenarioConfig::from_toml_str(&text)
}

/// JSON schema of the scenario file format.
pub fn scenario_schema() -> String {
    let schema = schemars::schema_for!(ScenarioConfig);
    serde_json::to_string_pretty(&schema).expect("schema serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
kind = "batch"
seed = 7
duration = 100.0

[[cluster]]
id = "n0"
cores = 8.0
memory = 32.0

[policy]
id = "edf"

[[batch.jobs]]
id = "a"
submit_time = 0.0
deadline = 60.0
memory_request = 4.0

[[batch.jobs.stages]]
id = "s0"
records = 800.0
rate = 10.0
"#;

    fn field_of(e: ScenarioError) -> String {
        match e {
            ScenarioError::Validation { field, .. } => field,
            other => panic!("expected a validation error, got {other}"),
        }
    }

    #[test]
    fn minimal_batch_gets_defaults() {
        let c = ScenarioConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(c.control_period, 1.0);
        assert_eq!(c.policy.kp, 2.0);
        assert_eq!(c.policy.ki, 0.5);
        assert_eq!(c.batch.unwrap().jobs[0].stages[0].shuffle_cost, 0.0);
    }

    #[test]
    fn negative_deadline_names_field() {
        let text = MINIMAL.replace("deadline = 60.0", "deadline = -5.0");
        let e = ScenarioConfig::from_toml_str(&text).unwrap_err();
        assert_eq!(field_of(e), "batch.jobs[0].deadline");
    }

    #[test]
    fn unknown_policy_lists_valid_ids() {
        let text = MINIMAL.replace("id = \"edf\"", "id = \"lifo\"");
        let e = ScenarioConfig::from_toml_str(&text).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("policy.id"));
        assert!(msg.contains("fifo, edf, proportional"), "{msg}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("seed = 7", "seed = 7\ncolour = \"red\"");
        assert!(matches!(
            ScenarioConfig::from_toml_str(&text),
            Err(ScenarioError::Parse(_))
        ));
    }

    #[test]
    fn wrong_section_for_kind() {
        let text = MINIMAL
            .replace("kind = \"batch\"", "kind = \"serving\"")
            .replace("id = \"edf\"", "id = \"roma\"");
        assert_eq!(field_of(ScenarioConfig::from_toml_str(&text).unwrap_err()), "batch");
    }

    #[test]
    fn toml_round_trip() {
        let c = ScenarioConfig::from_toml_str(MINIMAL).unwrap();
        let back = ScenarioConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn schema_mentions_sections() {
        let s = scenario_schema();
        for key in ["\"kind\"", "\"policy\"", "\"serving\"", "\"arrivals\""] {
            assert!(s.contains(key), "{key}");
        }
    }
}
