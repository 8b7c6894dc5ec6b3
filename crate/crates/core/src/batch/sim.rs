use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::executor::{control_step, PartitionProgress};
use super::job::BatchJob;
use super::memory::memory_rebalance;
use super::planner::{best_effort_plan, plan_stage, profile_job, StagePlan, StageProfile};
use crate::contention::{resolve_contention, ContentionStrategy, Demand};
use crate::control::PiControllerState;
use crate::sim::{
    check_capacity, Assignment, Ctx, EventKind, EventRecord, ExecutorState, JobRecord, Model, NodeSpec, SimError,
    SimTime,
};

/// Completions later than the deadline by more than this count as violations.
pub const VIOLATION_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BatchPolicy {
    /// One job at a time in submission order, each on the whole cluster.
    Fifo,
    /// Stage planning, per-executor PI control and node-level arbitration.
    DeadlineControl(ContentionStrategy),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchParams {
    pub policy: BatchPolicy,
    pub cores_per_executor_max: f64,
    /// Cap on executors per stage; defaults to total cluster cores over the per-executor maximum.
    pub max_executors_per_stage: Option<usize>,
    pub kp: f64,
    pub ki: f64,
    pub u_min: f64,
    /// Relative error applied to true rates by the profiler.
    pub profiling_error: f64,
    pub control_period: f64,
}

impl Default for BatchParams {
    fn default() -> Self {
        BatchParams {
            policy: BatchPolicy::DeadlineControl(ContentionStrategy::Edf),
            cores_per_executor_max: 4.0,
            max_executors_per_stage: None,
            kp: 2.0,
            ki: 0.5,
            u_min: 0.0,
            profiling_error: 0.0,
            control_period: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BatchEvent {
    Submit(usize),
    ExecutorDone { exec: usize, gen: u64 },
    StageComplete { job: usize, stage: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum StageStatus {
    Waiting,
    Running { plan: StagePlan, pending: usize },
    Shuffling,
    Done,
}

#[derive(Debug, Clone)]
struct JobRt {
    job: BatchJob,
    deps: Vec<Vec<usize>>,
    profiles: Vec<StageProfile>,
    stages: Vec<StageStatus>,
    completed: Vec<bool>,
    started: Option<SimTime>,
    finished: Option<SimTime>,
    memory_grant: f64,
    core_seconds: f64,
    live_executors: usize,
}

impl JobRt {
    fn running(&self) -> bool {
        self.started.is_some() && self.finished.is_none()
    }

    fn memory_factor(&self) -> f64 {
        (self.memory_grant / self.job.memory_request).min(1.0)
    }
}

#[derive(Debug, Clone)]
struct ExecRt {
    state: ExecutorState,
    job: usize,
    stage: usize,
    work: PartitionProgress,
    pi: PiControllerState,
    gen: u64,
}

/// Batch cluster under FIFO or deadline control.
pub struct BatchSimulation {
    nodes: Vec<NodeSpec>,
    params: BatchParams,
    jobs: Vec<JobRt>,
    execs: Vec<ExecRt>,
    live: BTreeSet<usize>,
    fifo_queue: VecDeque<usize>,
    last_advance: SimTime,
    max_executors: usize,
    capacity_checks: u64,
}

impl BatchSimulation {
    pub fn new(nodes: Vec<NodeSpec>, jobs: Vec<BatchJob>, params: BatchParams) -> Self {
        let total_cores: f64 = nodes.iter().map(|n| n.cores).sum();
        let max_executors = params
            .max_executors_per_stage
            .unwrap_or(((total_cores / params.cores_per_executor_max) + 1e-9).floor() as usize)
            .max(1);
        let jobs = jobs
            .into_iter()
            .map(|job| {
                let n = job.stages.len();
                JobRt {
                    deps: job.dep_indices(),
                    profiles: profile_job(&job, params.profiling_error),
                    job,
                    stages: vec![StageStatus::Waiting; n],
                    completed: vec![false; n],
                    started: None,
                    finished: None,
                    memory_grant: 0.0,
                    core_seconds: 0.0,
                    live_executors: 0,
                }
            })
            .collect();
        BatchSimulation {
            nodes,
            params,
            jobs,
            execs: Vec::new(),
            live: BTreeSet::new(),
            fifo_queue: VecDeque::new(),
            last_advance: SimTime::ZERO,
            max_executors,
            capacity_checks: 0,
        }
    }

    /// Submission events for every job, in job order.
    pub fn submissions(&self) -> Vec<EventRecord<BatchEvent>> {
        self.jobs
            .iter()
            .enumerate()
            .map(|(i, j)| EventRecord::new(j.job.submit(), EventKind::JobSubmit, BatchEvent::Submit(i)))
            .collect()
    }

    pub fn job_records(&self) -> Vec<JobRecord> {
        self.jobs.iter().map(|j| self.record(j)).collect()
    }

    pub fn capacity_checks(&self) -> u64 {
        self.capacity_checks
    }

    fn record(&self, j: &JobRt) -> JobRecord {
        let deadline_abs = j.job.absolute_deadline();
        let mean_cores = match (j.started, j.finished) {
            (Some(s), Some(f)) if f > s => j.core_seconds / (f - s),
            _ => 0.0,
        };
        JobRecord {
            job_id: j.job.id.clone(),
            submit: j.job.submit(),
            deadline_abs,
            start: j.started,
            finish: j.finished,
            violated: j.finished.is_some_and(|f| f - deadline_abs > VIOLATION_EPS),
            mean_cores,
        }
    }

    /// Integrates progress at the current grants up to `now`.
    fn advance_to(&mut self, now: SimTime) {
        let dt = now - self.last_advance;
        if dt <= 0.0 {
            return;
        }
        for &e in &self.live {
            let ex = &mut self.execs[e];
            let job = &mut self.jobs[ex.job];
            let rate = job.job.stages[ex.stage].rate * job.memory_factor();
            let g = ex.state.granted_cores;
            ex.work.processed = (ex.work.processed + g * rate * dt).min(ex.work.assigned);
            job.core_seconds += g * dt;
        }
        self.last_advance = now;
    }

    fn start_job(&mut self, j: usize, ctx: &mut Ctx<'_, BatchEvent>) -> Result<(), SimError> {
        let now = ctx.now();
        self.jobs[j].started = Some(now);
        ctx.log.note(now, format!("job {} started", self.jobs[j].job.id));
        self.rebalance_memory();
        self.start_ready_stages(j, ctx)
    }

    fn start_ready_stages(&mut self, j: usize, ctx: &mut Ctx<'_, BatchEvent>) -> Result<(), SimError> {
        let ready: Vec<usize> = (0..self.jobs[j].stages.len())
            .filter(|&s| {
                let job = &self.jobs[j];
                job.stages[s] == StageStatus::Waiting && job.deps[s].iter().all(|&d| job.completed[d])
            })
            .collect();
        for s in ready {
            self.start_stage(j, s, ctx)?;
        }
        Ok(())
    }

    fn start_stage(&mut self, j: usize, s: usize, ctx: &mut Ctx<'_, BatchEvent>) -> Result<(), SimError> {
        let now = ctx.now();
        let cmax = self.params.cores_per_executor_max;
        let plan = match self.params.policy {
            BatchPolicy::Fifo => {
                let mut p = best_effort_plan(&self.jobs[j].profiles[s], now, self.max_executors);
                p.best_effort = false;
                p.local_deadline = self.jobs[j].job.absolute_deadline().max(now);
                p
            }
            BatchPolicy::DeadlineControl(_) => {
                let job = &self.jobs[j];
                match plan_stage(
                    &job.job,
                    s,
                    now,
                    &job.profiles,
                    &job.completed,
                    cmax,
                    self.max_executors,
                ) {
                    Ok(p) => p,
                    Err(e) => {
                        ctx.log.note(now, e.to_string());
                        best_effort_plan(&job.profiles[s], now, self.max_executors)
                    }
                }
            }
        };
        ctx.log.sample(
            now,
            format!("plan/{}/{}", self.jobs[j].job.id, self.jobs[j].job.stages[s].id),
            plan.local_deadline.secs(),
        );
        for &records in &plan.per_executor_records {
            let id = self.execs.len();
            let node = self.place();
            let mut state = ExecutorState::cpu(id, node);
            state.assignment = Assignment::StagePartition { job: j, stage: s };
            state.busy = true;
            self.execs.push(ExecRt {
                state,
                job: j,
                stage: s,
                work: PartitionProgress::new(records),
                pi: PiControllerState::new(
                    self.params.kp,
                    self.params.ki,
                    self.params.u_min,
                    cmax,
                    self.params.control_period,
                ),
                gen: 0,
            });
            self.live.insert(id);
            self.jobs[j].live_executors += 1;
        }
        self.jobs[j].stages[s] = StageStatus::Running {
            pending: plan.executor_count,
            plan,
        };
        Ok(())
    }

    /// Node with the fewest live executors, lowest index on ties.
    fn place(&self) -> usize {
        let mut count = vec![0usize; self.nodes.len()];
        for &e in &self.live {
            count[self.execs[e].state.node] += 1;
        }
        (0..self.nodes.len()).min_by_key(|&n| (count[n], n)).unwrap_or(0)
    }

    fn rebalance_memory(&mut self) {
        let running: Vec<usize> = (0..self.jobs.len()).filter(|&j| self.jobs[j].running()).collect();
        let requests: Vec<f64> = running.iter().map(|&j| self.jobs[j].job.memory_request).collect();
        let total: f64 = self.nodes.iter().map(|n| n.memory).sum();
        for j in &mut self.jobs {
            j.memory_grant = 0.0;
        }
        for (&j, g) in running.iter().zip(memory_rebalance(&requests, total)) {
            self.jobs[j].memory_grant = g;
        }
    }

    /// Spreads each job's memory grant over its live executors, then scales down per node.
    fn assign_executor_memory(&mut self) {
        let mut per_node = vec![0.0; self.nodes.len()];
        for &e in &self.live {
            let ex = &mut self.execs[e];
            let job = &self.jobs[ex.job];
            ex.state.granted_memory = job.memory_grant / job.live_executors.max(1) as f64;
            per_node[ex.state.node] += ex.state.granted_memory;
        }
        for &e in &self.live {
            let ex = &mut self.execs[e];
            let n = ex.state.node;
            if per_node[n] > self.nodes[n].memory {
                ex.state.granted_memory *= self.nodes[n].memory / per_node[n];
            }
        }
    }

    /// Executor controllers, then per-node arbitration, then grants and completion forecasts.
    fn reallocate(&mut self, ctx: &mut Ctx<'_, BatchEvent>) -> Result<(), SimError> {
        let now = ctx.now();
        let cmax = self.params.cores_per_executor_max;
        let strategy = match self.params.policy {
            BatchPolicy::Fifo => ContentionStrategy::Proportional,
            BatchPolicy::DeadlineControl(s) => s,
        };
        let mut by_node: Vec<Vec<Demand>> = vec![Vec::new(); self.nodes.len()];
        for &e in &self.live {
            let ex = &mut self.execs[e];
            let job = &self.jobs[ex.job];
            let cores = match (&self.params.policy, &job.stages[ex.stage]) {
                (BatchPolicy::Fifo, _) => cmax,
                (BatchPolicy::DeadlineControl(_), StageStatus::Running { plan, .. }) => {
                    let rate = job.profiles[ex.stage].profiled_rate;
                    control_step(&ex.work, plan, rate, &mut ex.pi, now)
                }
                _ => 0.0,
            };
            by_node[ex.state.node].push(Demand {
                executor: e,
                cores,
                deadline: job.job.absolute_deadline(),
            });
        }
        for (n, demands) in by_node.iter().enumerate() {
            let grants = resolve_contention(demands, self.nodes[n].cores, strategy);
            for (d, g) in demands.iter().zip(grants) {
                self.execs[d.executor].state.granted_cores = g;
            }
        }
        self.assign_executor_memory();
        self.capacity_checks += 1;
        check_capacity(&self.nodes, self.live.iter().map(|&e| &self.execs[e].state), now)
            .map_err(SimError::Capacity)?;
        for &e in &self.live {
            let ex = &mut self.execs[e];
            ex.gen += 1;
            let job = &self.jobs[ex.job];
            let speed = ex.state.granted_cores * job.job.stages[ex.stage].rate * job.memory_factor();
            let remaining = ex.work.remaining();
            if remaining <= 0.0 || speed > 0.0 {
                let dt = if remaining <= 0.0 { 0.0 } else { remaining / speed };
                ctx.schedule(
                    now + dt,
                    EventKind::ExecutorDone,
                    BatchEvent::ExecutorDone { exec: e, gen: ex.gen },
                )?;
            }
        }
        Ok(())
    }

    fn finish_executor(&mut self, e: usize, ctx: &mut Ctx<'_, BatchEvent>) -> Result<(), SimError> {
        let now = ctx.now();
        let ex = &mut self.execs[e];
        ex.work.processed = ex.work.assigned;
        ex.state.busy = false;
        ex.state.granted_cores = 0.0;
        ex.state.granted_memory = 0.0;
        ex.state.assignment = Assignment::Idle;
        let (j, s) = (ex.job, ex.stage);
        self.live.remove(&e);
        let job = &mut self.jobs[j];
        job.live_executors -= 1;
        if let StageStatus::Running { pending, .. } = &mut job.stages[s] {
            *pending -= 1;
            if *pending == 0 {
                let shuffle = job.job.stages[s].shuffle_cost;
                job.stages[s] = StageStatus::Shuffling;
                ctx.schedule(
                    now + shuffle,
                    EventKind::StageComplete,
                    BatchEvent::StageComplete { job: j, stage: s },
                )?;
            }
        }
        Ok(())
    }

    fn complete_stage(&mut self, j: usize, s: usize, ctx: &mut Ctx<'_, BatchEvent>) -> Result<(), SimError> {
        let now = ctx.now();
        let job = &mut self.jobs[j];
        job.stages[s] = StageStatus::Done;
        job.completed[s] = true;
        if job.completed.iter().all(|&c| c) {
            job.finished = Some(now);
            let rec = self.record(&self.jobs[j]);
            if rec.violated {
                ctx.log.note(now, format!("job {} missed its deadline", rec.job_id));
            }
            ctx.log.jobs.push(rec);
            self.rebalance_memory();
            if self.params.policy == BatchPolicy::Fifo {
                if let Some(next) = self.fifo_queue.pop_front() {
                    self.start_job(next, ctx)?;
                }
            }
            Ok(())
        } else {
            self.start_ready_stages(j, ctx)
        }
    }

    fn fifo_busy(&self) -> bool {
        self.jobs.iter().any(JobRt::running)
    }
}

impl Model for BatchSimulation {
    type Payload = BatchEvent;

    fn handle(&mut self, ev: EventRecord<BatchEvent>, ctx: &mut Ctx<'_, BatchEvent>) -> Result<(), SimError> {
        self.advance_to(ev.time);
        match ev.payload {
            BatchEvent::Submit(j) => {
                ctx.log.note(ev.time, format!("job {} submitted", self.jobs[j].job.id));
                match self.params.policy {
                    BatchPolicy::Fifo if self.fifo_busy() => self.fifo_queue.push_back(j),
                    _ => self.start_job(j, ctx)?,
                }
            }
            BatchEvent::ExecutorDone { exec, gen } => {
                if !self.live.contains(&exec) || self.execs[exec].gen != gen {
                    return Ok(());
                }
                self.finish_executor(exec, ctx)?;
            }
            BatchEvent::StageComplete { job, stage } => self.complete_stage(job, stage, ctx)?,
        }
        self.reallocate(ctx)
    }

    fn control_tick(&mut self, ctx: &mut Ctx<'_, BatchEvent>) -> Result<(), SimError> {
        let now = ctx.now();
        self.advance_to(now);
        self.reallocate(ctx)?;
        let mut total = 0.0;
        for j in 0..self.jobs.len() {
            if !self.jobs[j].running() {
                continue;
            }
            let cores: f64 = self
                .live
                .iter()
                .filter(|&&e| self.execs[e].job == j)
                .map(|&e| self.execs[e].state.granted_cores)
                .sum();
            total += cores;
            ctx.log.sample(now, format!("cores/{}", self.jobs[j].job.id), cores);
        }
        ctx.log.sample(now, "cores/total", total);
        Ok(())
    }

    fn is_active(&self) -> bool {
        self.jobs.iter().any(JobRt::running)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::batch::job::chain;
    use crate::sim::Engine;

    fn run(nodes: Vec<NodeSpec>, jobs: Vec<BatchJob>, params: BatchParams, end: f64) -> (Vec<JobRecord>, u64) {
        let period = params.control_period;
        let sim = BatchSimulation::new(nodes, jobs, params);
        let subs = sim.submissions();
        let mut engine = Engine::new(sim, period).unwrap();
        for s in subs {
            engine.schedule(s).unwrap();
        }
        engine.run_until(SimTime::new(end)).unwrap();
        let ticks = engine.ticks();
        (engine.model().job_records(), ticks)
    }

    #[test]
    fn single_job_fifo_closed_form() {
        // 1 node x 8 cores, cmax 4 -> 2 executors at 4 cores; 800 records at 10 rec/s/core = 10 s
        let nodes = vec![NodeSpec::new("n0", 8.0, 64.0, 0)];
        let job = chain("a", 0.0, 100.0, &[(800.0, 10.0, 0.0)]);
        let params = BatchParams {
            policy: BatchPolicy::Fifo,
            ..Default::default()
        };
        let (recs, _) = run(nodes, vec![job], params, 1000.0);
        let f = recs[0].finish.unwrap().secs();
        assert!((f - 10.0).abs() < 1e-9, "finish {f}");
        assert!((recs[0].mean_cores - 8.0).abs() < 1e-9);
    }

    #[test]
    fn fifo_queues_second_job() {
        let nodes = vec![NodeSpec::new("n0", 8.0, 64.0, 0)];
        let a = chain("a", 0.0, 100.0, &[(800.0, 10.0, 0.0)]);
        let b = chain("b", 2.0, 100.0, &[(80.0, 10.0, 0.0)]);
        let params = BatchParams {
            policy: BatchPolicy::Fifo,
            ..Default::default()
        };
        let (recs, _) = run(nodes, vec![a, b], params, 1000.0);
        assert_eq!(recs[1].start, Some(SimTime::new(10.0)));
        assert!((recs[1].finish.unwrap().secs() - 11.0).abs() < 1e-9);
    }

    #[test]
    fn deadline_control_meets_feasible_deadline() {
        let nodes = vec![NodeSpec::new("n0", 16.0, 64.0, 0), NodeSpec::new("n1", 16.0, 64.0, 0)];
        let job = chain("a", 0.0, 60.0, &[(2000.0, 10.0, 1.0), (1000.0, 10.0, 2.0)]);
        let (recs, ticks) = run(nodes, vec![job], BatchParams::default(), 1000.0);
        let f = recs[0].finish.unwrap().secs();
        assert!(!recs[0].violated, "finished at {f}");
        assert!(f > 55.0, "finished too early at {f}");
        assert!(ticks > 50);
    }

    #[test]
    fn hopeless_deadline_runs_best_effort() {
        let nodes = vec![NodeSpec::new("n0", 4.0, 64.0, 0)];
        let job = chain("a", 0.0, 1.0, &[(400.0, 10.0, 0.0), (400.0, 10.0, 0.0)]);
        let (recs, _) = run(nodes, vec![job], BatchParams::default(), 1000.0);
        assert!(recs[0].violated);
        // both stages at the node's 4 cores: 10 s each
        assert!((recs[0].finish.unwrap().secs() - 20.0).abs() < 1e-6);
    }
}
