use serde::{Deserialize, Serialize};

use super::service::InferenceService;
use crate::sim::MetricsLog;

/// One measurement window of one service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRow {
    pub service: String,
    pub window_start: f64,
    /// Aggregated response time of requests finishing in the window; absent if none finished.
    pub agg_rt: Option<f64>,
    pub violated: bool,
    /// Mean granted CPU cores over the window's control ticks.
    pub cores: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceSla {
    pub id: String,
    pub windows: usize,
    pub violations: usize,
    pub completed: usize,
    pub max_rt: Option<f64>,
    pub mean_cores: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlaReport {
    pub rows: Vec<WindowRow>,
    pub services: Vec<ServiceSla>,
    pub violations: usize,
    pub max_rt: Option<f64>,
    /// Mean of the `cores/total` series.
    pub mean_cores: Option<f64>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, sum) = values.fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    (n > 0).then(|| sum / n as f64)
}

/// Splits `[0, horizon)` into consecutive windows of each service's `window` length and
/// aggregates the response times of requests by finish time. Requests finishing after the
/// horizon extend the last window range.
pub fn measure_sla(log: &MetricsLog, services: &[InferenceService], horizon: f64) -> SlaReport {
    let mut rows = Vec::new();
    let mut per_service = Vec::with_capacity(services.len());
    for (s, svc) in services.iter().enumerate() {
        let done: Vec<(f64, f64)> = log
            .requests
            .iter()
            .filter(|r| r.service == s)
            .map(|r| (r.finish.secs(), r.response_time()))
            .collect();
        let end = done.iter().map(|d| d.0).fold(horizon, f64::max);
        let count = ((end / svc.window).ceil() as usize).max(1);
        let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); count];
        for &(f, rt) in &done {
            let k = ((f / svc.window).floor() as usize).min(count - 1);
            buckets[k].push(rt);
        }
        let series = format!("cores/{}", svc.id);
        let mut violations = 0;
        for (k, rts) in buckets.iter().enumerate() {
            let start = k as f64 * svc.window;
            let agg = svc.aggregator.aggregate(rts);
            let violated = agg.is_some_and(|a| a > svc.sla_rt);
            violations += violated as usize;
            let cores = mean(
                log.series(&series)
                    .filter(|x| x.time.secs() >= start && x.time.secs() < start + svc.window)
                    .map(|x| x.value),
            );
            rows.push(WindowRow {
                service: svc.id.clone(),
                window_start: start,
                agg_rt: agg,
                violated,
                cores,
            });
        }
        per_service.push(ServiceSla {
            id: svc.id.clone(),
            windows: count,
            violations,
            completed: done.len(),
            max_rt: done.iter().map(|d| d.1).reduce(f64::max),
            mean_cores: mean(log.series(&series).map(|x| x.value)),
        });
    }
    SlaReport {
        rows,
        violations: per_service.iter().map(|s| s.violations).sum(),
        max_rt: per_service.iter().filter_map(|s| s.max_rt).reduce(f64::max),
        mean_cores: mean(log.series("cores/total").map(|x| x.value)),
        services: per_service,
    }
}
