use super::arrivals::gen_arrivals;
use super::export::Rows;
use super::rng::stream;
use super::scenario::{ScenarioConfig, ScenarioKind};
use crate::batch::{BatchParams, BatchPolicy, BatchSimulation};
use crate::contention::ContentionStrategy;
use crate::fed::{run_federation_logged, Trajectory};
use crate::serve::{
    measure_sla, RomaParams, RulesParams, ServeAudit, ServeParams, ServePolicy, ServingSimulation, SlaReport,
};
use crate::sim::{Engine, MetricsLog, SimError, SimTime};

/// Default serving controller floor in cores.
pub const SERVING_U_MIN: f64 = 0.25;

/// Everything one scenario run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub kind: ScenarioKind,
    pub policy: String,
    pub seed: u64,
    pub log: MetricsLog,
    pub rows: Rows,
    pub sla: Option<SlaReport>,
    pub audit: Option<ServeAudit>,
}

/// Name of the random stream feeding one service's arrival trace.
pub fn trace_stream_name(service: usize) -> String {
    format!("serving/trace/{service}")
}

/// Name of the random stream feeding federation accuracy noise.
pub const FED_NOISE_STREAM: &str = "fed/noise";

pub fn batch_params(cfg: &ScenarioConfig) -> BatchParams {
    let p = &cfg.policy;
    let policy = match p.id.as_str() {
        "fifo" => BatchPolicy::Fifo,
        "proportional" => BatchPolicy::DeadlineControl(ContentionStrategy::Proportional),
        _ => BatchPolicy::DeadlineControl(ContentionStrategy::Edf),
    };
    BatchParams {
        policy,
        cores_per_executor_max: p.cores_per_executor_max,
        max_executors_per_stage: p.max_executors_per_stage,
        kp: p.kp,
        ki: p.ki,
        u_min: p.u_min.unwrap_or(0.0),
        profiling_error: p.profiling_error,
        control_period: cfg.control_period,
    }
}

pub fn serve_params(cfg: &ScenarioConfig) -> ServeParams {
    let p = &cfg.policy;
    let policy = match p.id.as_str() {
        "rules" => ServePolicy::Rules(RulesParams {
            step: p.rules_step,
            floor: p.rules_floor,
            window: p.rules_window,
        }),
        _ => ServePolicy::Roma(RomaParams {
            kp: p.kp,
            ki: p.ki,
            u_min: p.u_min.unwrap_or(SERVING_U_MIN),
            setpoint_fraction: p.setpoint_fraction,
            control_window: p.control_window,
            service_floor: p.service_floor,
        }),
    };
    ServeParams {
        policy,
        control_period: cfg.control_period,
        routing_latency: cfg.serving.as_ref().map_or(0.0, |s| s.routing_latency),
    }
}

/// Runs a validated scenario.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutput, SimError> {
    let mut out = RunOutput {
        kind: cfg.kind,
        policy: cfg.policy.id.clone(),
        seed: cfg.seed,
        log: MetricsLog::new(),
        rows: Rows::Batch(Vec::new()),
        sla: None,
        audit: None,
    };
    match cfg.kind {
        ScenarioKind::Batch => {
            let jobs = cfg.batch.as_ref().expect("validated batch section").jobs.clone();
            let sim = BatchSimulation::new(cfg.cluster.clone(), jobs, batch_params(cfg));
            let subs = sim.submissions();
            let mut engine = Engine::new(sim, cfg.control_period)?;
            for s in subs {
                engine.schedule(s)?;
            }
            engine.run_until(SimTime::new(cfg.duration))?;
            let (model, mut log) = engine.into_parts();
            log.jobs = model.job_records();
            out.rows = Rows::batch(&log);
            out.log = log;
        }
        ScenarioKind::Federation => {
            let w = cfg.federation.as_ref().expect("validated federation section");
            let trajectory: Trajectory = cfg.policy.id.parse().expect("validated policy id");
            let (log, _) = run_federation_logged(
                &w.config(trajectory),
                &w.oracle,
                stream(cfg.seed, FED_NOISE_STREAM),
                cfg.control_period,
            );
            out.rows = Rows::federation(&log);
            out.log = log;
        }
        ScenarioKind::Serving => {
            let w = cfg.serving.as_ref().expect("validated serving section");
            let traces: Vec<Vec<f64>> = w
                .arrivals
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    let mut t = gen_arrivals(a, cfg.duration, &mut stream(cfg.seed, &trace_stream_name(i)));
                    t.retain(|&x| x < cfg.duration);
                    t
                })
                .collect();
            let mut sim = ServingSimulation::new(w.services.clone(), cfg.cluster.clone(), serve_params(cfg));
            let arrivals = sim.arrival_events(&traces);
            let mut engine = Engine::new(sim, cfg.control_period)?;
            for a in arrivals {
                engine.schedule(a)?;
            }
            engine.run_until(SimTime::new(cfg.duration + w.drain))?;
            let (model, log) = engine.into_parts();
            let report = measure_sla(&log, &w.services, cfg.duration);
            out.rows = Rows::Serving(report.rows.clone());
            out.sla = Some(report);
            out.audit = Some(model.audit());
            out.log = log;
        }
    }
    Ok(out)
}
