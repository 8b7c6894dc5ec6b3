//! Deterministic cluster simulation and resource controllers for ML workloads.
//!
//! Three policy stacks run on a shared discrete-event engine ([`sim`]):
//!
//! * [`batch`]: deadline-driven control of DAG batch jobs, with a FIFO baseline.
//! * [`fed`]: accuracy-driven per-round epoch planning for federated training.
//! * [`serve`]: SLA-driven CPU/GPU scheduling of inference requests, with a rule-based baseline.
//!
//! [`harness`] loads scenario files, generates workloads and exports results; [`cli`] wires
//! it all to the `mlrm` binary.

pub mod batch;
pub mod cli;
pub mod contention;
pub mod control;
pub mod fed;
pub mod harness;
pub mod serve;
pub mod sim;
