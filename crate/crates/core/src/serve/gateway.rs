use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::service::InferenceService;
use super::ServeError;
use crate::sim::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueuedRequest {
    pub id: u64,
    pub service: usize,
    pub arrival: SimTime,
}

/// Master-side FIFO queue per service.
#[derive(Debug, Clone, Default)]
pub struct Gateway {
    queues: Vec<VecDeque<QueuedRequest>>,
}

impl Gateway {
    pub fn new(services: usize) -> Self {
        Gateway {
            queues: vec![VecDeque::new(); services],
        }
    }

    pub fn enqueue(&mut self, req: QueuedRequest) -> Result<(), ServeError> {
        self.queues
            .get_mut(req.service)
            .ok_or(ServeError::UnknownService(req.service))?
            .push_back(req);
        Ok(())
    }

    pub fn head(&self, service: usize) -> Option<&QueuedRequest> {
        self.queues.get(service)?.front()
    }

    pub fn pop(&mut self, service: usize) -> Option<QueuedRequest> {
        self.queues.get_mut(service)?.pop_front()
    }

    pub fn len(&self, service: usize) -> usize {
        self.queues.get(service).map_or(0, VecDeque::len)
    }

    pub fn total_len(&self) -> usize {
        self.queues.iter().map(VecDeque::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.queues.iter().all(VecDeque::is_empty)
    }

    pub fn services(&self) -> usize {
        self.queues.len()
    }
}

/// Risk that the head request of a queue misses its SLA if it is served on a GPU now.
pub fn risk(head_arrival: SimTime, now: SimTime, service: &InferenceService) -> f64 {
    (now - head_arrival + service.gpu_time) / service.sla_rt
}

/// Service whose head request is most likely to violate its SLA; lowest index on ties.
pub fn gpu_pick(gateway: &Gateway, services: &[InferenceService], now: SimTime) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (s, svc) in services.iter().enumerate() {
        if let Some(h) = gateway.head(s) {
            let r = risk(h.arrival, now, svc);
            if best.is_none_or(|(_, b)| r > b) {
                best = Some((s, r));
            }
        }
    }
    best.map(|(s, _)| s)
}

/// Service owning the globally oldest queued request, as if all queues were one FIFO.
pub fn gpu_pick_fifo(gateway: &Gateway) -> Option<usize> {
    (0..gateway.services())
        .filter_map(|s| gateway.head(s).map(|h| (h.arrival, h.id, s)))
        .min_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, _, s)| s)
}

/// Cyclic cursor over services for the CPU scheduler.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RoundRobin {
    pub last: Option<usize>,
}

/// Next eligible service after the last one picked, wrapping around.
pub fn cpu_pick(eligible: &[bool], rr: &mut RoundRobin) -> Option<usize> {
    let n = eligible.len();
    if n == 0 {
        return None;
    }
    let start = rr.last.map_or(0, |l| (l + 1) % n);
    let pick = (0..n).map(|i| (start + i) % n).find(|&s| eligible[s])?;
    rr.last = Some(pick);
    Some(pick)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::serve::SlaAggregator;

    fn svc(gpu_time: f64, sla: f64) -> InferenceService {
        InferenceService {
            id: "s".into(),
            sla_rt: sla,
            aggregator: SlaAggregator::Max,
            window: 10.0,
            cpu_time_1core: 0.5,
            gpu_time,
        }
    }

    fn req(id: u64, service: usize, t: f64) -> QueuedRequest {
        QueuedRequest {
            id,
            service,
            arrival: SimTime::new(t),
        }
    }

    #[test]
    fn enqueue_and_fifo() {
        let mut g = Gateway::new(2);
        g.enqueue(req(1, 0, 1.0)).unwrap();
        g.enqueue(req(2, 0, 2.0)).unwrap();
        assert_eq!(g.len(0), 2);
        assert_eq!(g.pop(0).unwrap().id, 1);
        assert_eq!(g.pop(0).unwrap().id, 2);
        assert!(matches!(g.enqueue(req(3, 5, 1.0)), Err(ServeError::UnknownService(5))));
    }

    #[test]
    fn gpu_pick_prefers_higher_risk() {
        let services = vec![svc(0.05, 0.4), svc(0.05, 0.4)];
        let mut g = Gateway::new(2);
        let now = 1.0;
        g.enqueue(req(1, 0, now - 0.1)).unwrap();
        g.enqueue(req(2, 1, now - 0.3)).unwrap();
        let t = SimTime::new(now);
        assert!((risk(g.head(0).unwrap().arrival, t, &services[0]) - 0.375).abs() < 1e-12);
        assert!((risk(g.head(1).unwrap().arrival, t, &services[1]) - 0.875).abs() < 1e-12);
        assert_eq!(gpu_pick(&g, &services, t), Some(1));
    }

    #[test]
    fn gpu_pick_empty_and_single() {
        let services = vec![svc(0.05, 0.4), svc(0.05, 0.4)];
        let mut g = Gateway::new(2);
        assert_eq!(gpu_pick(&g, &services, SimTime::ZERO), None);
        g.enqueue(req(1, 1, 0.0)).unwrap();
        assert_eq!(gpu_pick(&g, &services, SimTime::new(0.5)), Some(1));
    }

    #[test]
    fn fifo_pick_is_global_arrival_order() {
        let mut g = Gateway::new(3);
        g.enqueue(req(1, 2, 0.5)).unwrap();
        g.enqueue(req(2, 0, 0.7)).unwrap();
        g.enqueue(req(3, 1, 0.6)).unwrap();
        assert_eq!(gpu_pick_fifo(&g), Some(2));
        g.pop(2);
        assert_eq!(gpu_pick_fifo(&g), Some(1));
    }

    #[test]
    fn round_robin_cycles() {
        let mut rr = RoundRobin { last: Some(0) };
        assert_eq!(cpu_pick(&[true, true, true], &mut rr), Some(1));
        assert_eq!(cpu_pick(&[true, true, true], &mut rr), Some(2));
        assert_eq!(cpu_pick(&[true, true, true], &mut rr), Some(0));
    }

    #[test]
    fn round_robin_skips_empty() {
        let mut rr = RoundRobin { last: Some(2) };
        assert_eq!(cpu_pick(&[false, false, true], &mut rr), Some(2));
        let mut rr = RoundRobin { last: Some(1) };
        assert_eq!(cpu_pick(&[false, false, false], &mut rr), None);
        assert_eq!(rr.last, Some(1));
    }
}
