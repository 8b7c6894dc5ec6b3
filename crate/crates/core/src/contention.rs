//! Node-level arbitration of core demands that exceed a node's capacity.

use serde::{Deserialize, Serialize};

use crate::sim::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum ContentionStrategy {
    /// Earliest deadline first: full demands in deadline order until capacity runs out.
    Edf,
    /// Every demand scaled by `capacity / total`.
    Proportional,
}

impl std::str::FromStr for ContentionStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "edf" => Ok(ContentionStrategy::Edf),
            "proportional" => Ok(ContentionStrategy::Proportional),
            other => Err(format!(
                "unknown contention strategy {other:?} (expected edf or proportional)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Demand {
    pub executor: usize,
    pub cores: f64,
    pub deadline: SimTime,
}

/// Grants for each demand, in input order. `Σ grants ≤ capacity` always holds.
pub fn resolve_contention(demands: &[Demand], capacity: f64, strategy: ContentionStrategy) -> Vec<f64> {
    debug_assert!(demands.iter().all(|d| d.cores.is_finite() && d.cores >= 0.0));
    let total: f64 = demands.iter().map(|d| d.cores).sum();
    if total <= capacity {
        return demands.iter().map(|d| d.cores).collect();
    }
    let capacity = capacity.max(0.0);
    match strategy {
        ContentionStrategy::Proportional => {
            let scale = capacity / total;
            demands.iter().map(|d| d.cores * scale).collect()
        }
        ContentionStrategy::Edf => {
            let mut order: Vec<usize> = (0..demands.len()).collect();
            order.sort_by(|&a, &b| {
                demands[a]
                    .deadline
                    .cmp(&demands[b].deadline)
                    .then(demands[a].executor.cmp(&demands[b].executor))
            });
            let mut grants = vec![0.0; demands.len()];
            let mut left = capacity;
            for i in order {
                let g = demands[i].cores.min(left);
                grants[i] = g;
                left -= g;
                if left <= 0.0 {
                    break;
                }
            }
            grants
        }
    }
}
