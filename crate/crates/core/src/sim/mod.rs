//! Deterministic discrete-event engine and the cluster model shared by all policies.
//!
//! Events are dequeued in `(time, insertion order)`. Controllers run on a fixed tick grid
//! while the model reports activity; between ticks grants are constant and completions are
//! solved exactly.

mod cluster;
mod engine;
mod event;
mod metrics;
mod time;

pub use cluster::{check_capacity, Assignment, Device, ExecutorState, NodeSpec, CAPACITY_EPS};
pub use engine::{Ctx, Engine, Model};
pub use event::{EventKind, EventQueue, EventRecord};
pub use metrics::{JobRecord, MetricsLog, RequestRecord, RoundRecord, Sample};
pub use time::SimTime;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("event scheduled at {at} but the clock is already at {now}")]
    EventInPast { at: SimTime, now: SimTime },
    #[error("control period must be positive and finite, got {0}")]
    InvalidPeriod(f64),
    #[error("capacity invariant violated: {0}")]
    Capacity(String),
}
