use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::gateway::{cpu_pick, gpu_pick, gpu_pick_fifo, Gateway, QueuedRequest, RoundRobin};
use super::layout::provision_layout;
use super::scaling::{supervise, vscale_step, VScalerState};
use super::service::{percentile, InferenceService};
use crate::control::PiControllerState;
use crate::sim::{
    check_capacity, Ctx, Device, EventKind, EventRecord, ExecutorState, MetricsLog, Model, NodeSpec, RequestRecord,
    SimError, SimTime,
};

/// Grants below this are treated as no capacity when dispatching.
const MIN_DISPATCH_GRANT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RomaParams {
    pub kp: f64,
    pub ki: f64,
    pub u_min: f64,
    /// Response-time setpoint as a fraction of the SLA.
    pub setpoint_fraction: f64,
    /// How far back the controllers look for completed requests, in seconds.
    pub control_window: f64,
    /// Raise each executor's floor to the grant at which one request meets the setpoint.
    pub service_floor: bool,
}

impl Default for RomaParams {
    fn default() -> Self {
        RomaParams {
            kp: 2.0,
            ki: 0.5,
            u_min: 0.25,
            setpoint_fraction: 0.8,
            control_window: 2.0,
            service_floor: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RulesParams {
    /// Cores added or removed per rule firing.
    pub step: f64,
    pub floor: f64,
    /// Evaluation period of the rules, in seconds.
    pub window: f64,
}

impl Default for RulesParams {
    fn default() -> Self {
        RulesParams {
            step: 0.5,
            floor: 0.5,
            window: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ServePolicy {
    /// Risk-greedy GPU scheduling with GPU-aware PI vertical scaling.
    Roma(RomaParams),
    /// Static split with threshold rules and a FIFO GPU queue.
    Rules(RulesParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServeParams {
    pub policy: ServePolicy,
    pub control_period: f64,
    /// Fixed gateway delay before a request is queued, in seconds.
    pub routing_latency: f64,
}

impl Default for ServeParams {
    fn default() -> Self {
        ServeParams {
            policy: ServePolicy::Roma(RomaParams::default()),
            control_period: 1.0,
            routing_latency: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ServeEvent {
    Arrival(QueuedRequest),
    GpuDone { gpu: usize },
    CpuDone { exec: usize, gen: u64 },
}

#[derive(Debug, Clone)]
struct CpuJob {
    req: QueuedRequest,
    start: SimTime,
    /// Remaining work in core-seconds.
    remaining: f64,
}

#[derive(Debug, Clone)]
struct CpuExec {
    state: ExecutorState,
    job: Option<CpuJob>,
    last_update: SimTime,
    gen: u64,
    scaler: VScalerState,
}

#[derive(Debug, Clone)]
struct GpuExec {
    state: ExecutorState,
    job: Option<(QueuedRequest, SimTime)>,
}

#[derive(Debug, Clone, Copy)]
struct Completion {
    finish: f64,
    rt: f64,
    on_gpu: bool,
}

/// Counters checked by the serving invariants.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ServeAudit {
    pub arrived: u64,
    pub completed: u64,
    pub queued_at_end: u64,
    pub in_flight_at_end: u64,
    /// Event boundaries at which a GPU sat idle while some queue was non-empty.
    pub gpu_idle_with_work: u64,
    pub capacity_checks: u64,
}

/// Master gateway plus worker nodes serving inference requests.
pub struct ServingSimulation {
    services: Vec<InferenceService>,
    nodes: Vec<NodeSpec>,
    params: ServeParams,
    gateway: Gateway,
    rr: RoundRobin,
    cpu: Vec<CpuExec>,
    /// `cpu_index[node][service]`.
    cpu_index: Vec<Vec<usize>>,
    gpu: Vec<GpuExec>,
    recent: Vec<VecDeque<Completion>>,
    audit: ServeAudit,
    total_arrivals: u64,
    ticks: u64,
}

impl ServingSimulation {
    pub fn new(services: Vec<InferenceService>, nodes: Vec<NodeSpec>, params: ServeParams) -> Self {
        let m = services.len();
        let mut cpu = Vec::new();
        let mut cpu_index = Vec::new();
        let mut gpu = Vec::new();
        let mut next_id = 0;
        for (n, spec) in nodes.iter().enumerate() {
            let layout = provision_layout(m, spec, n, next_id);
            next_id += layout.cpu.len() + layout.gpu.len();
            let mut row = Vec::with_capacity(m);
            for (s, state) in layout.cpu.into_iter().enumerate() {
                row.push(cpu.len());
                let pi = match &params.policy {
                    ServePolicy::Roma(p) => {
                        let floor = if p.service_floor {
                            let svc = &services[s];
                            (svc.cpu_time_1core / (p.setpoint_fraction * svc.sla_rt)).max(p.u_min)
                        } else {
                            p.u_min
                        };
                        PiControllerState::new(
                            p.kp,
                            p.ki,
                            floor.min(spec.cores / m as f64),
                            spec.cores,
                            params.control_period,
                        )
                    }
                    ServePolicy::Rules(r) => PiControllerState::new(
                        0.0,
                        0.0,
                        r.floor.min(spec.cores / m as f64),
                        spec.cores,
                        params.control_period,
                    ),
                };
                cpu.push(CpuExec {
                    state,
                    job: None,
                    last_update: SimTime::ZERO,
                    gen: 0,
                    scaler: VScalerState { pi, gpu_share: 0.0 },
                });
            }
            cpu_index.push(row);
            gpu.extend(layout.gpu.into_iter().map(|state| GpuExec { state, job: None }));
        }
        ServingSimulation {
            gateway: Gateway::new(m),
            recent: vec![VecDeque::new(); m],
            services,
            nodes,
            params,
            rr: RoundRobin::default(),
            cpu,
            cpu_index,
            gpu,
            audit: ServeAudit::default(),
            total_arrivals: 0,
            ticks: 0,
        }
    }

    /// Arrival events for per-service timestamp lists; ids follow global `(time, service)` order.
    pub fn arrival_events(&mut self, traces: &[Vec<f64>]) -> Vec<EventRecord<ServeEvent>> {
        let mut all: Vec<(f64, usize)> = traces
            .iter()
            .enumerate()
            .flat_map(|(s, ts)| ts.iter().map(move |&t| (t, s)))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        self.total_arrivals += all.len() as u64;
        let latency = self.params.routing_latency;
        all.into_iter()
            .enumerate()
            .map(|(id, (t, service))| {
                let arrival = SimTime::new(t);
                EventRecord::new(
                    arrival + latency,
                    EventKind::RequestArrival,
                    ServeEvent::Arrival(QueuedRequest {
                        id: id as u64,
                        service,
                        arrival,
                    }),
                )
            })
            .collect()
    }

    pub fn services(&self) -> &[InferenceService] {
        &self.services
    }

    pub fn audit(&self) -> ServeAudit {
        let mut a = self.audit.clone();
        a.queued_at_end = self.gateway.total_len() as u64;
        a.in_flight_at_end = (self.cpu.iter().filter(|c| c.job.is_some()).count()
            + self.gpu.iter().filter(|g| g.job.is_some()).count()) as u64;
        a
    }

    fn executors(&self) -> impl Iterator<Item = &ExecutorState> {
        self.cpu
            .iter()
            .map(|c| &c.state)
            .chain(self.gpu.iter().map(|g| &g.state))
    }

    fn complete(
        &mut self,
        req: QueuedRequest,
        start: SimTime,
        now: SimTime,
        device: Device,
        node: usize,
        ctx: &mut Ctx<'_, ServeEvent>,
    ) {
        let rec = RequestRecord {
            id: req.id,
            service: req.service,
            arrival: req.arrival,
            start,
            finish: now,
            device,
            node,
        };
        self.recent[req.service].push_back(Completion {
            finish: now.secs(),
            rt: rec.response_time(),
            on_gpu: device == Device::Gpu,
        });
        self.audit.completed += 1;
        ctx.log.requests.push(rec);
    }

    /// Brings in-flight CPU work up to `now` at the current grant.
    fn advance_cpu(&mut self, e: usize, now: SimTime) {
        let c = &mut self.cpu[e];
        if let Some(job) = &mut c.job {
            job.remaining = (job.remaining - c.state.granted_cores * (now - c.last_update)).max(0.0);
        }
        c.last_update = now;
    }

    fn schedule_cpu_done(&mut self, e: usize, ctx: &mut Ctx<'_, ServeEvent>) -> Result<(), SimError> {
        let now = ctx.now();
        let c = &mut self.cpu[e];
        c.gen += 1;
        if let Some(job) = &c.job {
            let g = c.state.granted_cores;
            if job.remaining <= 0.0 {
                ctx.schedule(
                    now,
                    EventKind::RequestComplete,
                    ServeEvent::CpuDone { exec: e, gen: c.gen },
                )?;
            } else if g > 0.0 {
                ctx.schedule(
                    now + job.remaining / g,
                    EventKind::RequestComplete,
                    ServeEvent::CpuDone { exec: e, gen: c.gen },
                )?;
            }
        }
        Ok(())
    }

    fn dispatch(&mut self, ctx: &mut Ctx<'_, ServeEvent>) -> Result<(), SimError> {
        let now = ctx.now();
        for g in 0..self.gpu.len() {
            if self.gpu[g].job.is_some() {
                continue;
            }
            let pick = match self.params.policy {
                ServePolicy::Roma(_) => gpu_pick(&self.gateway, &self.services, now),
                ServePolicy::Rules(_) => gpu_pick_fifo(&self.gateway),
            };
            let Some(s) = pick else { break };
            let req = self.gateway.pop(s).expect("picked queue is non-empty");
            let gpu = &mut self.gpu[g];
            gpu.job = Some((req, now));
            gpu.state.busy = true;
            ctx.schedule(
                now + self.services[s].gpu_time,
                EventKind::RequestComplete,
                ServeEvent::GpuDone { gpu: g },
            )?;
        }
        loop {
            let eligible: Vec<bool> = (0..self.services.len())
                .map(|s| self.gateway.len(s) > 0 && self.idle_cpu(s).is_some())
                .collect();
            let Some(s) = cpu_pick(&eligible, &mut self.rr) else {
                break;
            };
            let e = self.idle_cpu(s).expect("eligible service has an idle executor");
            let req = self.gateway.pop(s).expect("eligible queue is non-empty");
            let work = self.services[s].cpu_time_1core;
            let c = &mut self.cpu[e];
            c.job = Some(CpuJob {
                req,
                start: now,
                remaining: work,
            });
            c.state.busy = true;
            c.last_update = now;
            self.schedule_cpu_done(e, ctx)?;
        }
        Ok(())
    }

    /// Idle CPU executor of `service` with the largest grant; lowest node on ties.
    fn idle_cpu(&self, service: usize) -> Option<usize> {
        self.cpu_index
            .iter()
            .map(|row| row[service])
            .filter(|&e| self.cpu[e].job.is_none() && self.cpu[e].state.granted_cores > MIN_DISPATCH_GRANT)
            .fold(None, |best: Option<usize>, e| match best {
                Some(b) if self.cpu[b].state.granted_cores >= self.cpu[e].state.granted_cores => Some(b),
                _ => Some(e),
            })
    }

    fn audit_boundary(&mut self, now: SimTime) -> Result<(), SimError> {
        if !self.gateway.is_empty() && self.gpu.iter().any(|g| g.job.is_none()) {
            self.audit.gpu_idle_with_work += 1;
        }
        self.audit.capacity_checks += 1;
        check_capacity(&self.nodes, self.executors(), now).map_err(SimError::Capacity)
    }

    fn forget_old(&mut self, now: f64) {
        let keep = self
            .services
            .iter()
            .map(|s| s.window)
            .fold(0.0, f64::max)
            .max(match &self.params.policy {
                ServePolicy::Roma(p) => p.control_window,
                ServePolicy::Rules(r) => r.window,
            });
        for q in &mut self.recent {
            while q.front().is_some_and(|c| c.finish < now - keep) {
                q.pop_front();
            }
        }
    }

    fn recent_rts(&self, service: usize, since: f64) -> impl Iterator<Item = &Completion> {
        self.recent[service].iter().filter(move |c| c.finish >= since)
    }

    fn roma_demands(&mut self, p: &RomaParams, now: SimTime) -> Vec<f64> {
        let t = now.secs();
        let m = self.services.len();
        let mut measured = Vec::with_capacity(m);
        let mut shares = Vec::with_capacity(m);
        for s in 0..m {
            let done: Vec<&Completion> = self.recent_rts(s, t - p.control_window).collect();
            let gpu = done.iter().filter(|c| c.on_gpu).count();
            shares.push(if done.is_empty() {
                0.0
            } else {
                gpu as f64 / done.len() as f64
            });
            let mut rts: Vec<f64> = done.iter().map(|c| c.rt).collect();
            // requests still waiting or running already have a lower bound on their response time
            if let Some(h) = self.gateway.head(s) {
                rts.push(now - h.arrival);
            }
            for row in &self.cpu_index {
                if let Some(job) = &self.cpu[row[s]].job {
                    rts.push(now - job.req.arrival);
                }
            }
            measured.push(self.services[s].aggregator.aggregate(&rts));
        }
        let mut demands = vec![0.0; self.cpu.len()];
        for row in &self.cpu_index {
            for (s, &e) in row.iter().enumerate() {
                let c = &mut self.cpu[e];
                c.scaler.gpu_share = shares[s];
                demands[e] = vscale_step(
                    measured[s],
                    &self.services[s],
                    p.setpoint_fraction,
                    c.state.granted_cores,
                    &mut c.scaler,
                );
            }
        }
        demands
    }

    fn rules_demands(&mut self, r: &RulesParams, now: SimTime) -> Vec<f64> {
        let mut demands: Vec<f64> = self.cpu.iter().map(|c| c.state.granted_cores).collect();
        let every = (r.window / self.params.control_period).round().max(1.0) as u64;
        if self.ticks % every != 0 {
            return demands;
        }
        let since = now.secs() - r.window;
        for (n, row) in self.cpu_index.iter().enumerate() {
            for (s, &e) in row.iter().enumerate() {
                let rts: Vec<f64> = self.recent_rts(s, since).map(|c| c.rt).collect();
                if rts.is_empty() {
                    continue;
                }
                let p95 = percentile(&rts, 0.95);
                let sla = self.services[s].sla_rt;
                if p95 > sla {
                    let used: f64 = row.iter().map(|&x| demands[x]).sum();
                    if self.nodes[n].cores - used >= r.step - 1e-12 {
                        demands[e] += r.step;
                    }
                } else if p95 < 0.5 * sla {
                    demands[e] = (demands[e] - r.step).max(self.cpu[e].scaler.pi.u_min);
                }
            }
        }
        demands
    }
}

impl Model for ServingSimulation {
    type Payload = ServeEvent;

    fn handle(&mut self, ev: EventRecord<ServeEvent>, ctx: &mut Ctx<'_, ServeEvent>) -> Result<(), SimError> {
        let now = ev.time;
        match ev.payload {
            ServeEvent::Arrival(req) => {
                self.audit.arrived += 1;
                self.gateway
                    .enqueue(req)
                    .map_err(|e| SimError::Capacity(e.to_string()))?;
            }
            ServeEvent::GpuDone { gpu } => {
                let g = &mut self.gpu[gpu];
                let (req, start) = g.job.take().expect("GPU completion without a request");
                g.state.busy = false;
                let node = g.state.node;
                self.complete(req, start, now, Device::Gpu, node, ctx);
            }
            ServeEvent::CpuDone { exec, gen } => {
                if self.cpu[exec].gen != gen || self.cpu[exec].job.is_none() {
                    return Ok(());
                }
                self.advance_cpu(exec, now);
                let c = &mut self.cpu[exec];
                let job = c.job.take().expect("checked above");
                c.state.busy = false;
                let node = c.state.node;
                self.complete(job.req, job.start, now, Device::Cpu, node, ctx);
            }
        }
        self.dispatch(ctx)?;
        self.audit_boundary(now)
    }

    fn control_tick(&mut self, ctx: &mut Ctx<'_, ServeEvent>) -> Result<(), SimError> {
        let now = ctx.now();
        self.forget_old(now.secs());
        for e in 0..self.cpu.len() {
            self.advance_cpu(e, now);
        }
        let policy = self.params.policy.clone();
        let demands = match &policy {
            ServePolicy::Roma(p) => self.roma_demands(p, now),
            ServePolicy::Rules(r) => self.rules_demands(r, now),
        };
        self.ticks += 1;
        for row in self.cpu_index.clone() {
            let node = self.cpu[row[0]].state.node;
            let node_demands: Vec<f64> = row.iter().map(|&e| demands[e]).collect();
            for (&e, g) in row.iter().zip(supervise(&node_demands, self.nodes[node].cores)) {
                self.cpu[e].state.granted_cores = g;
            }
        }
        for e in 0..self.cpu.len() {
            self.schedule_cpu_done(e, ctx)?;
        }
        let mut total = 0.0;
        for (s, svc) in self.services.iter().enumerate() {
            let cores: f64 = self
                .cpu_index
                .iter()
                .map(|row| self.cpu[row[s]].state.granted_cores)
                .sum();
            total += cores;
            ctx.log.sample(now, format!("cores/{}", svc.id), cores);
        }
        ctx.log.sample(now, "cores/total", total);
        self.dispatch(ctx)?;
        self.audit_boundary(now)
    }

    fn is_active(&self) -> bool {
        self.audit.arrived < self.total_arrivals
            || !self.gateway.is_empty()
            || self.cpu.iter().any(|c| c.job.is_some())
            || self.gpu.iter().any(|g| g.job.is_some())
    }
}

/// Checks a finished run's request log against the serving invariants; returns one message per breach.
///
/// Covered: each arrived request is either completed exactly once or still queued or in flight,
/// `arrival <= start <= finish`, CPU-served requests of one service start in arrival order, and
/// no GPU idled while a queue held work.
pub fn audit_requests(log: &MetricsLog, audit: &ServeAudit) -> Vec<String> {
    let mut out = Vec::new();
    if audit.arrived != audit.completed + audit.queued_at_end + audit.in_flight_at_end {
        out.push(format!(
            "conservation: {} arrived, {} completed, {} queued, {} in flight",
            audit.arrived, audit.completed, audit.queued_at_end, audit.in_flight_at_end
        ));
    }
    if log.requests.len() as u64 != audit.completed {
        out.push(format!(
            "{} completions logged but {} counted",
            log.requests.len(),
            audit.completed
        ));
    }
    let mut ids: Vec<u64> = log.requests.iter().map(|r| r.id).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        out.push("a request completed more than once".into());
    }
    if let Some(r) = log
        .requests
        .iter()
        .find(|r| !(r.arrival <= r.start && r.start <= r.finish))
    {
        out.push(format!("request {} has out-of-order timestamps", r.id));
    }
    let services = log.requests.iter().map(|r| r.service + 1).max().unwrap_or(0);
    for s in 0..services {
        let mut cpu: Vec<&RequestRecord> = log
            .requests
            .iter()
            .filter(|r| r.service == s && r.device == Device::Cpu)
            .collect();
        cpu.sort_by(|a, b| a.start.cmp(&b.start).then(a.id.cmp(&b.id)));
        if cpu.windows(2).any(|w| w[1].arrival < w[0].arrival) {
            out.push(format!("service {s}: CPU starts out of arrival order"));
        }
    }
    if audit.gpu_idle_with_work > 0 {
        out.push(format!(
            "GPU idle with queued work at {} event boundaries",
            audit.gpu_idle_with_work
        ));
    }
    out
}
