use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::sim::SimTime;

/// One stage of a batch DAG with its ground-truth processing rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct StageSpec {
    pub id: String,
    #[serde(default)]
    pub deps: Vec<String>,
    /// Work volume in record-units.
    pub records: f64,
    /// True processing rate in records per second per core-unit.
    pub rate: f64,
    /// Fixed serial delay at the end of the stage, in seconds.
    #[serde(default)]
    pub shuffle_cost: f64,
}

/// A deadline-bearing batch computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct BatchJob {
    pub id: String,
    /// Submission instant in seconds.
    pub submit_time: f64,
    /// Deadline relative to submission, in seconds.
    pub deadline: f64,
    /// Memory requested in GB.
    pub memory_request: f64,
    pub stages: Vec<StageSpec>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum JobError {
    #[error("job {job}: {field} must be {what}")]
    Field {
        job: String,
        field: String,
        what: &'static str,
    },
    #[error("job {job}: duplicate stage id {stage}")]
    DuplicateStage { job: String, stage: String },
    #[error("job {job}: stage {stage} depends on unknown stage {dep}")]
    UnknownDep { job: String, stage: String, dep: String },
    #[error("job {job}: stage graph has a cycle")]
    Cycle { job: String },
}

impl BatchJob {
    pub fn submit(&self) -> SimTime {
        SimTime::new(self.submit_time)
    }

    pub fn absolute_deadline(&self) -> SimTime {
        SimTime::new(self.submit_time + self.deadline)
    }

    /// Predecessor indices for each stage. Only valid after [`BatchJob::validate`].
    pub fn dep_indices(&self) -> Vec<Vec<usize>> {
        let index: HashMap<&str, usize> = self
            .stages
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id.as_str(), i))
            .collect();
        self.stages
            .iter()
            .map(|s| s.deps.iter().map(|d| index[d.as_str()]).collect())
            .collect()
    }

    pub fn validate(&self) -> Result<(), JobError> {
        let field = |field: String, what| JobError::Field {
            job: self.id.clone(),
            field,
            what,
        };
        if !(self.submit_time.is_finite() && self.submit_time >= 0.0) {
            return Err(field("submit_time".into(), "a non-negative number"));
        }
        if !(self.deadline.is_finite() && self.deadline > 0.0) {
            return Err(field("deadline".into(), "positive"));
        }
        if !(self.memory_request.is_finite() && self.memory_request > 0.0) {
            return Err(field("memory_request".into(), "positive"));
        }
        if self.stages.is_empty() {
            return Err(field("stages".into(), "non-empty"));
        }
        let mut seen = HashMap::new();
        for (i, s) in self.stages.iter().enumerate() {
            if seen.insert(s.id.as_str(), i).is_some() {
                return Err(JobError::DuplicateStage {
                    job: self.id.clone(),
                    stage: s.id.clone(),
                });
            }
            if !(s.records.is_finite() && s.records > 0.0) {
                return Err(field(format!("stages.{}.records", s.id), "positive"));
            }
            if !(s.rate.is_finite() && s.rate > 0.0) {
                return Err(field(format!("stages.{}.rate", s.id), "positive"));
            }
            if !(s.shuffle_cost.is_finite() && s.shuffle_cost >= 0.0) {
                return Err(field(format!("stages.{}.shuffle_cost", s.id), "non-negative"));
            }
        }
        for s in &self.stages {
            for d in &s.deps {
                if !seen.contains_key(d.as_str()) {
                    return Err(JobError::UnknownDep {
                        job: self.id.clone(),
                        stage: s.id.clone(),
                        dep: d.clone(),
                    });
                }
            }
        }
        if topo_order(&self.dep_indices()).is_none() {
            return Err(JobError::Cycle { job: self.id.clone() });
        }
        Ok(())
    }
}

/// Kahn's algorithm; `None` when the graph has a cycle.
pub(crate) fn topo_order(deps: &[Vec<usize>]) -> Option<Vec<usize>> {
    let n = deps.len();
    let mut indeg: Vec<usize> = deps.iter().map(Vec::len).collect();
    let mut succ = vec![Vec::new(); n];
    for (i, ds) in deps.iter().enumerate() {
        for &d in ds {
            succ[d].push(i);
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).rev().collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop() {
        order.push(i);
        for &s in &succ[i] {
            indeg[s] -= 1;
            if indeg[s] == 0 {
                ready.push(s);
            }
        }
    }
    (order.len() == n).then_some(order)
}

#[cfg(test)]
pub(crate) fn chain(id: &str, submit: f64, deadline: f64, stages: &[(f64, f64, f64)]) -> BatchJob {
    BatchJob {
        id: id.into(),
        submit_time: submit,
        deadline,
        memory_request: 10.0,
        stages: stages
            .iter()
            .enumerate()
            .map(|(i, &(records, rate, shuffle_cost))| StageSpec {
                id: format!("s{i}"),
                deps: if i == 0 { vec![] } else { vec![format!("s{}", i - 1)] },
                records,
                rate,
                shuffle_cost,
            })
            .collect(),
    }
}
