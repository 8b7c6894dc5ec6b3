use serde::{Deserialize, Serialize};

use super::cluster::Device;
use super::time::SimTime;

/// One time-series observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub time: SimTime,
    pub series: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub job_id: String,
    pub submit: SimTime,
    pub deadline_abs: SimTime,
    pub start: Option<SimTime>,
    pub finish: Option<SimTime>,
    pub violated: bool,
    /// Average granted core-units between start and finish.
    pub mean_cores: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestRecord {
    pub id: u64,
    pub service: usize,
    pub arrival: SimTime,
    pub start: SimTime,
    pub finish: SimTime,
    pub device: Device,
    pub node: usize,
}

impl RequestRecord {
    pub fn response_time(&self) -> f64 {
        self.finish - self.arrival
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub r: u32,
    /// Trajectory target; absent for bootstrap rounds.
    pub target: Option<f64>,
    pub e_r: u32,
    pub s_r: u32,
    pub ac_fit: f64,
    pub ac_eval: f64,
    pub time: SimTime,
}

/// Append-only output of a simulation run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsLog {
    pub samples: Vec<Sample>,
    pub jobs: Vec<JobRecord>,
    pub requests: Vec<RequestRecord>,
    pub rounds: Vec<RoundRecord>,
    pub notes: Vec<(SimTime, String)>,
}

impl MetricsLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn sample(&mut self, time: SimTime, series: impl Into<String>, value: f64) {
        self.samples.push(Sample {
            time,
            series: series.into(),
            value,
        });
    }

    pub fn note(&mut self, time: SimTime, msg: impl Into<String>) {
        self.notes.push((time, msg.into()));
    }

    pub fn series<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Sample> + 'a {
        self.samples.iter().filter(move |s| s.series == name)
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
            && self.jobs.is_empty()
            && self.requests.is_empty()
            && self.rounds.is_empty()
            && self.notes.is_empty()
    }
}
