use serde::{Deserialize, Serialize};

use super::job::BatchJob;
use crate::sim::SimTime;

/// Profiled performance of one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageProfile {
    pub stage: usize,
    pub deps: Vec<usize>,
    pub records: f64,
    /// Records per second per core-unit as measured by profiling.
    pub profiled_rate: f64,
    pub shuffle_cost: f64,
}

impl StageProfile {
    /// Duration at `cores` core-units on a single executor, shuffle included.
    pub fn duration(&self, cores: f64) -> f64 {
        self.records / (self.profiled_rate * cores) + self.shuffle_cost
    }
}

/// Copies the DAG and reports each stage's rate as `true_rate * (1 + error)`.
pub fn profile_job(job: &BatchJob, error: f64) -> Vec<StageProfile> {
    job.stages
        .iter()
        .zip(job.dep_indices())
        .enumerate()
        .map(|(i, (s, deps))| StageProfile {
            stage: i,
            deps,
            records: s.records,
            profiled_rate: s.rate * (1.0 + error),
            shuffle_cost: s.shuffle_cost,
        })
        .collect()
}

/// Output of the stage controller for one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagePlan {
    pub stage: usize,
    /// When the plan was made, which is also when the stage starts.
    pub start: SimTime,
    pub local_deadline: SimTime,
    pub executor_count: usize,
    pub per_executor_records: Vec<f64>,
    pub shuffle_cost: f64,
    /// Set when the plan was made after the job deadline had already passed.
    pub best_effort: bool,
}

impl StagePlan {
    /// Time by which the executors must finish so the shuffle still fits before the local deadline.
    pub fn compute_deadline(&self) -> SimTime {
        SimTime::new((self.local_deadline.secs() - self.shuffle_cost).max(self.start.secs()))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("deadline {deadline} of job {job} already passed at {now}")]
    DeadlineAlreadyPassed {
        job: String,
        now: SimTime,
        deadline: SimTime,
    },
}

fn even_split(records: f64, n: usize) -> Vec<f64> {
    vec![records / n as f64; n]
}

/// Longest profiled path from `stage` to any sink, counting only stages not yet completed.
fn longest_remaining_path(profiles: &[StageProfile], completed: &[bool], stage: usize, cores: f64) -> f64 {
    let mut succ = vec![Vec::new(); profiles.len()];
    for p in profiles {
        for &d in &p.deps {
            succ[d].push(p.stage);
        }
    }
    let mut memo = vec![None; profiles.len()];
    fn go(
        s: usize,
        profiles: &[StageProfile],
        succ: &[Vec<usize>],
        completed: &[bool],
        cores: f64,
        memo: &mut Vec<Option<f64>>,
    ) -> f64 {
        if let Some(v) = memo[s] {
            return v;
        }
        let tail = succ[s]
            .iter()
            .filter(|&&n| !completed[n])
            .map(|&n| go(n, profiles, succ, completed, cores, memo))
            .fold(0.0, f64::max);
        let v = profiles[s].duration(cores) + tail;
        memo[s] = Some(v);
        v
    }
    go(stage, profiles, &succ, completed, cores, &mut memo)
}

/// Stage controller: splits the remaining job budget and sizes the executor pool.
///
/// The stage gets a share of the remaining budget proportional to its profiled duration over
/// the longest not-yet-completed path it starts. Executors are sized so that, at
/// `cores_per_executor_max`, the records finish before the shuffle must begin.
pub fn plan_stage(
    job: &BatchJob,
    stage: usize,
    now: SimTime,
    profiles: &[StageProfile],
    completed: &[bool],
    cores_per_executor_max: f64,
    max_executors: usize,
) -> Result<StagePlan, PlanError> {
    let deadline = job.absolute_deadline();
    if now >= deadline {
        return Err(PlanError::DeadlineAlreadyPassed {
            job: job.id.clone(),
            now,
            deadline,
        });
    }
    let p = &profiles[stage];
    let budget = deadline - now;
    let path = longest_remaining_path(profiles, completed, stage, cores_per_executor_max);
    let local_budget = budget * p.duration(cores_per_executor_max) / path;
    let local_deadline = (now + local_budget).min(deadline);
    let compute_window = local_deadline - now - p.shuffle_cost;
    let max_executors = max_executors.max(1);
    let executor_count = if compute_window > 0.0 {
        let required_rate = p.records / compute_window;
        let n = (required_rate / (p.profiled_rate * cores_per_executor_max) - 1e-12).ceil();
        (n.max(1.0) as usize).min(max_executors)
    } else {
        max_executors
    };
    Ok(StagePlan {
        stage,
        start: now,
        local_deadline,
        executor_count,
        per_executor_records: even_split(p.records, executor_count),
        shuffle_cost: p.shuffle_cost,
        best_effort: false,
    })
}

/// Plan used once the job deadline has passed: maximum parallelism, local deadline now.
pub fn best_effort_plan(profile: &StageProfile, now: SimTime, max_executors: usize) -> StagePlan {
    let n = max_executors.max(1);
    StagePlan {
        stage: profile.stage,
        start: now,
        local_deadline: now,
        executor_count: n,
        per_executor_records: even_split(profile.records, n),
        shuffle_cost: profile.shuffle_cost,
        best_effort: true,
    }
}
