//! Deadline-driven control of data-parallel batch jobs.
//!
//! A profiler supplies per-stage rates, a memory controller shares memory fairly among running
//! jobs, a stage controller derives local deadlines and executor counts, and per-executor PI
//! controllers request cores that node-level arbitration scales to capacity. [`BatchPolicy::Fifo`]
//! is the whole-cluster-per-job baseline.

mod executor;
mod job;
mod memory;
mod planner;
mod sim;

pub use executor::{advance, control_step, Advance, PartitionProgress};
pub use job::{BatchJob, JobError, StageSpec};
pub use memory::memory_rebalance;
pub use planner::{best_effort_plan, plan_stage, profile_job, PlanError, StagePlan, StageProfile};
pub use sim::{BatchEvent, BatchParams, BatchPolicy, BatchSimulation, VIOLATION_EPS};
