use serde::{Deserialize, Serialize};

use super::service::InferenceService;
use crate::contention::{resolve_contention, ContentionStrategy, Demand};
use crate::control::PiControllerState;
use crate::sim::SimTime;

/// Multiplicative decay applied to the grant when a window saw no requests.
pub const IDLE_DECAY: f64 = 0.95;

/// Controller state for one (service, node) CPU executor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VScalerState {
    pub pi: PiControllerState,
    /// Fraction of recently completed requests served on a GPU.
    pub gpu_share: f64,
}

/// GPU-aware vertical scaler for one CPU executor.
///
/// The error is the aggregated response time's distance from the setpoint, normalized by the
/// SLA. The proportional term is discounted by the GPU share so that speedups coming from GPU
/// offload do not make the controller shed cores. With no measurement the grant decays towards
/// `u_min`. `pi.u_max` should be the node's core count.
pub fn vscale_step(
    measured_rt: Option<f64>,
    service: &InferenceService,
    setpoint_fraction: f64,
    current_grant: f64,
    state: &mut VScalerState,
) -> f64 {
    let pi = &mut state.pi;
    let Some(rt) = measured_rt else {
        return pi.clamp_output(pi.u_min + (current_grant - pi.u_min) * IDLE_DECAY);
    };
    let setpoint = setpoint_fraction * service.sla_rt;
    let error = (rt - setpoint) / service.sla_rt;
    let share = state.gpu_share.clamp(0.0, 1.0);
    pi.output(current_grant, pi.kp * error * (1.0 - share), error, 1.0)
}

/// Node supervisor: proportional scale-down when the node's executors ask for more than it has.
pub fn supervise(demands: &[f64], cores: f64) -> Vec<f64> {
    let d: Vec<Demand> = demands
        .iter()
        .enumerate()
        .map(|(i, &c)| Demand {
            executor: i,
            cores: c,
            deadline: SimTime::ZERO,
        })
        .collect();
    resolve_contention(&d, cores, ContentionStrategy::Proportional)
}
