use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum SlaAggregator {
    #[default]
    Max,
    P95,
}

impl std::str::FromStr for SlaAggregator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "max" => Ok(SlaAggregator::Max),
            "p95" => Ok(SlaAggregator::P95),
            other => Err(format!("unknown aggregator {other:?} (expected max or p95)")),
        }
    }
}

impl SlaAggregator {
    /// Aggregates response times; `None` for an empty sample.
    pub fn aggregate(self, rts: &[f64]) -> Option<f64> {
        if rts.is_empty() {
            return None;
        }
        match self {
            SlaAggregator::Max => rts.iter().copied().reduce(f64::max),
            SlaAggregator::P95 => Some(percentile(rts, 0.95)),
        }
    }
}

/// Nearest-rank percentile: the `ceil(q * n)`-th smallest value.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

fn default_window() -> f64 {
    10.0
}

/// A served model with its response-time SLA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct InferenceService {
    pub id: String,
    /// Response-time bound in seconds.
    pub sla_rt: f64,
    #[serde(default)]
    pub aggregator: SlaAggregator,
    /// Aggregation window in seconds.
    #[serde(default = "default_window")]
    pub window: f64,
    /// Service time on one core-unit, in seconds.
    pub cpu_time_1core: f64,
    /// Service time on one GPU, in seconds.
    pub gpu_time: f64,
}

impl InferenceService {
    pub fn validate(&self) -> Result<(), (&'static str, &'static str)> {
        if !(self.sla_rt.is_finite() && self.sla_rt > 0.0) {
            return Err(("sla_rt", "positive"));
        }
        if !(self.window.is_finite() && self.window > 0.0) {
            return Err(("window", "positive"));
        }
        if !(self.cpu_time_1core.is_finite() && self.cpu_time_1core > 0.0) {
            return Err(("cpu_time_1core", "positive"));
        }
        if !(self.gpu_time.is_finite() && self.gpu_time > 0.0 && self.gpu_time <= self.cpu_time_1core) {
            return Err(("gpu_time", "positive and no larger than cpu_time_1core"));
        }
        Ok(())
    }
}
