use serde::{Deserialize, Serialize};

use super::time::SimTime;

/// Capacity of one simulated machine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: String,
    /// Fractional CPU capacity in core-units.
    pub cores: f64,
    /// Memory capacity in GB.
    pub memory: f64,
    #[serde(default)]
    pub gpus: u32,
}

impl NodeSpec {
    pub fn new(id: impl Into<String>, cores: f64, memory: f64, gpus: u32) -> Self {
        NodeSpec {
            id: id.into(),
            cores,
            memory,
            gpus,
        }
    }

    /// Returns the name of the first violated field, if any.
    pub fn validate(&self) -> Result<(), &'static str> {
        if !(self.cores.is_finite() && self.cores > 0.0) {
            return Err("cores");
        }
        if !(self.memory.is_finite() && self.memory > 0.0) {
            return Err("memory");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Device {
    Cpu,
    Gpu,
}

/// What an executor is currently bound to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Assignment {
    Idle,
    /// A data partition of one stage of a batch job.
    StagePartition {
        job: usize,
        stage: usize,
    },
    /// Indices of the served models this executor holds.
    Models(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutorState {
    pub id: usize,
    pub node: usize,
    pub device: Device,
    /// Granted core-units; meaningful for CPU-bound executors only.
    pub granted_cores: f64,
    pub granted_memory: f64,
    pub assignment: Assignment,
    pub busy: bool,
}

impl ExecutorState {
    pub fn cpu(id: usize, node: usize) -> Self {
        ExecutorState {
            id,
            node,
            device: Device::Cpu,
            granted_cores: 0.0,
            granted_memory: 0.0,
            assignment: Assignment::Idle,
            busy: false,
        }
    }

    pub fn gpu(id: usize, node: usize) -> Self {
        ExecutorState {
            device: Device::Gpu,
            ..Self::cpu(id, node)
        }
    }
}

/// Absolute slack tolerated by the capacity checks.
pub const CAPACITY_EPS: f64 = 1e-9;

/// Checks per-node core and memory sums of CPU-bound executors against the node specs.
///
/// Returns a description of the first violation.
pub fn check_capacity<'a>(
    nodes: &[NodeSpec],
    executors: impl IntoIterator<Item = &'a ExecutorState>,
    at: SimTime,
) -> Result<(), String> {
    let mut cores = vec![0.0; nodes.len()];
    let mut memory = vec![0.0; nodes.len()];
    for e in executors {
        if e.device == Device::Cpu {
            cores[e.node] += e.granted_cores;
        }
        memory[e.node] += e.granted_memory;
    }
    for (i, n) in nodes.iter().enumerate() {
        if cores[i] > n.cores + CAPACITY_EPS {
            return Err(format!(
                "node {} over core capacity at {at}: {} > {}",
                n.id, cores[i], n.cores
            ));
        }
        if memory[i] > n.memory + CAPACITY_EPS {
            return Err(format!(
                "node {} over memory capacity at {at}: {} > {}",
                n.id, memory[i], n.memory
            ));
        }
    }
    Ok(())
}
