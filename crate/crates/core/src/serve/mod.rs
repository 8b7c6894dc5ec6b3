//! SLA-driven scheduling of inference requests on CPU and GPU executors.
//!
//! The master keeps one FIFO queue per service. Whenever a GPU is idle it serves the head of
//! the queue most likely to miss its SLA; CPU executors (one per service per node) take requests
//! round-robin. Per-executor vertical scalers resize CPU grants from measured response times,
//! discounting GPU offload, and a supervisor on each node keeps the sum within capacity.

mod gateway;
mod layout;
mod scaling;
mod service;
mod sim;
mod sla;

pub use gateway::{cpu_pick, gpu_pick, gpu_pick_fifo, risk, Gateway, QueuedRequest, RoundRobin};
pub use layout::{provision_layout, ProvisionLayout};
pub use scaling::{supervise, vscale_step, VScalerState, IDLE_DECAY};
pub use service::{percentile, InferenceService, SlaAggregator};
pub use sim::{
    audit_requests, RomaParams, RulesParams, ServeAudit, ServeEvent, ServeParams, ServePolicy, ServingSimulation,
};
pub use sla::{measure_sla, ServiceSla, SlaReport, WindowRow};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ServeError {
    #[error("unknown service index {0}")]
    UnknownService(usize),
}
