use serde::{Deserialize, Serialize};

use super::planner::StagePlan;
use crate::control::PiControllerState;
use crate::sim::SimTime;

/// Progress of one executor on its data partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionProgress {
    pub assigned: f64,
    pub processed: f64,
}

impl PartitionProgress {
    pub fn new(assigned: f64) -> Self {
        PartitionProgress {
            assigned,
            processed: 0.0,
        }
    }

    pub fn remaining(&self) -> f64 {
        (self.assigned - self.processed).max(0.0)
    }

    pub fn is_done(&self) -> bool {
        self.processed >= self.assigned
    }

    pub fn fraction(&self) -> f64 {
        if self.assigned > 0.0 {
            (self.processed / self.assigned).min(1.0)
        } else {
            1.0
        }
    }
}

/// Executor-level controller: core demand that keeps the partition on track for the stage
/// deadline.
///
/// Feedforward is the allocation that finishes the remaining records exactly at the compute
/// deadline at the profiled rate; the PI term corrects for the gap between expected and
/// actual progress.
pub fn control_step(
    work: &PartitionProgress,
    plan: &StagePlan,
    profiled_rate: f64,
    pi: &mut PiControllerState,
    now: SimTime,
) -> f64 {
    let target = plan.compute_deadline();
    let weight = pi.step_weight(now.secs());
    if now >= target {
        return pi.u_max;
    }
    let span = target - plan.start;
    let expected = if span > 0.0 {
        ((now - plan.start) / span).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let error = expected - work.fraction();
    let feedforward = work.remaining() / (profiled_rate * (target - now).max(pi.period));
    pi.output(feedforward, pi.kp * error, error, weight)
}

/// Outcome of integrating an executor over a constant-grant interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Advance {
    pub processed: f64,
    /// Offset into the interval at which the partition completed, if it did.
    pub completed_at: Option<f64>,
}

/// Plant law: `processed += grant * rate * dt`, capped at the assigned records.
pub fn advance(work: &PartitionProgress, grant: f64, true_rate: f64, dt: f64) -> Advance {
    let speed = grant * true_rate;
    let remaining = work.remaining();
    if speed > 0.0 && remaining <= speed * dt {
        Advance {
            processed: work.assigned,
            completed_at: Some(remaining / speed),
        }
    } else {
        Advance {
            processed: (work.processed + speed * dt).min(work.assigned),
            completed_at: None,
        }
    }
}
