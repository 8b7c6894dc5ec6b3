//! Scenario files, seeded workload generation, runs and result export.

pub mod arrivals;
pub mod export;
pub mod replicate;
pub mod rng;
pub mod run;
pub mod scenario;

pub use arrivals::{gen_arrivals, ArrivalSpec};
pub use export::{export_results, fmt9, write_atomic, BatchRow, Format, JobOutcome, RoundRow, Rows, Summary};
pub use replicate::{replicate, Check, Experiment, Report};
pub use rng::stream;
pub use run::{run_scenario, trace_stream_name, RunOutput, FED_NOISE_STREAM};
pub use scenario::{
    load_scenario, scenario_schema, BatchWorkload, FederationWorkload, PolicyConfig, ScenarioConfig, ScenarioError,
    ScenarioKind, ServingWorkload,
};
