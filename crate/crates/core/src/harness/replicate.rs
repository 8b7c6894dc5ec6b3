use serde::{Deserialize, Serialize};

use super::export::Summary;
use super::run::run_scenario;
use super::scenario::{ScenarioConfig, ScenarioError};
use crate::batch::VIOLATION_EPS;
use crate::serve::audit_requests;
use crate::sim::SimError;

pub const FIG1_TOML: &str = include_str!("../../scenarios/fig1.toml");
pub const TABLE1_TOML: &str = include_str!("../../scenarios/table1.toml");
pub const SERVING_TOML: &str = include_str!("../../scenarios/serving.toml");

pub const TABLE1_SEEDS: u64 = 20;
pub const SERVING_SEEDS: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Fig1,
    Table1,
    Serving,
}

impl std::str::FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fig1" => Ok(Experiment::Fig1),
            "table1" => Ok(Experiment::Table1),
            "serving" => Ok(Experiment::Serving),
            other => Err(format!(
                "unknown experiment {other:?} (expected fig1, table1 or serving)"
            )),
        }
    }
}

impl Experiment {
    pub fn bundled(self) -> &'static str {
        match self {
            Experiment::Fig1 => FIG1_TOML,
            Experiment::Table1 => TABLE1_TOML,
            Experiment::Serving => SERVING_TOML,
        }
    }

    pub fn scenario(self) -> ScenarioConfig {
        ScenarioConfig::from_toml_str(self.bundled()).expect("bundled scenarios are valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: Experiment,
    pub checks: Vec<Check>,
    /// Summaries of every run behind the checks.
    pub runs: Vec<Summary>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReplicateError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("simulation failed: {0}")]
    Sim(#[from] SimError),
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.to_string(),
        passed,
        detail,
    }
}

fn summary_of(cfg: &ScenarioConfig) -> Result<(Summary, super::run::RunOutput), ReplicateError> {
    let out = run_scenario(cfg)?;
    Ok((Summary::from_rows(&cfg.policy.id, cfg.seed, &out.rows), out))
}

/// Runs `base` (a batch scenario) under fifo, edf and proportional.
pub fn replicate_fig1(base: &ScenarioConfig) -> Result<Report, ReplicateError> {
    let mut runs = Vec::new();
    for p in ["fifo", "edf", "proportional"] {
        runs.push(summary_of(&base.with_policy(p)?)?.0);
    }
    let jobs = &base.batch.as_ref().expect("batch scenario").jobs;
    let budget = |id: &str| jobs.iter().find(|j| j.id == id).map(|j| (j.submit_time, j.deadline));
    let (fifo, edf, prop) = (&runs[0], &runs[1], &runs[2]);

    let late: Vec<&str> = fifo
        .jobs
        .iter()
        .filter(|j| j.violated)
        .map(|j| j.job_id.as_str())
        .collect();
    let mut early = Vec::new();
    for j in &fifo.jobs {
        if j.violated {
            continue;
        }
        let (submit, deadline) = budget(&j.job_id).expect("job from scenario");
        let used = j.finish.map_or(f64::INFINITY, |f| (f - submit) / deadline);
        early.push((j.job_id.clone(), used));
    }
    let fifo_ok = late.len() == 1 && early.iter().all(|(_, u)| *u < 0.7);
    let ratios: Vec<(String, Option<f64>)> = prop.jobs.iter().map(|j| (j.job_id.clone(), j.deadline_ratio)).collect();
    let within = prop.jobs.iter().all(|j| {
        j.finish
            .is_some_and(|f| f >= 0.85 * j.deadline_abs && f <= j.deadline_abs + VIOLATION_EPS)
    });
    Ok(Report {
        experiment: Experiment::Fig1,
        checks: vec![
            check(
                "fifo violates exactly one deadline; the others finish under 0.7 of their budgets",
                fifo_ok,
                format!("late: {late:?}; budget used by the rest: {early:?}"),
            ),
            check(
                "edf meets every deadline",
                edf.violations == 0,
                format!("{} violations", edf.violations),
            ),
            check(
                "proportional meets every deadline, finishing within [0.85, 1.0] of it",
                prop.violations == 0 && within,
                format!("{} violations; finish/deadline: {ratios:?}", prop.violations),
            ),
        ],
        runs,
    })
}

/// Runs the federation scenario for seeds `1..=seeds` under both trajectories.
pub fn replicate_table1(base: &ScenarioConfig, seeds: u64) -> Result<Report, ReplicateError> {
    let mut runs = Vec::new();
    let mut bootstrap_ok = true;
    let mut anchors = Vec::new();
    for p in ["quadratic", "linear"] {
        for seed in 1..=seeds {
            let mut cfg = base.with_policy(p)?;
            cfg.seed = seed;
            let (s, out) = summary_of(&cfg)?;
            let rounds = &out.log.rounds;
            bootstrap_ok &= rounds.len() >= 2 && rounds[0].e_r == 1 && rounds[1].e_r == 1;
            if let Some(r) = rounds.get(1) {
                anchors.push(r.ac_eval);
            }
            runs.push(s);
        }
    }
    let ac_sla = base.federation.as_ref().expect("federation scenario").ac_sla;
    let finals = |p: &str| -> Vec<f64> {
        runs.iter()
            .filter(|s| s.policy == p)
            .map(|s| s.final_accuracy.unwrap_or(0.0))
            .collect()
    };
    let (quad, lin) = (finals("quadratic"), finals("linear"));
    let share = |v: &[f64], f: &dyn Fn(f64) -> bool| v.iter().filter(|&&a| f(a)).count() as f64 / v.len().max(1) as f64;
    let quad_share = share(&quad, &|a| a >= ac_sla);
    let lin_share = share(&lin, &|a| (0.70..ac_sla).contains(&a));
    let anchor_ok = anchors.iter().all(|a| (0.20..=0.35).contains(a));
    Ok(Report {
        experiment: Experiment::Table1,
        checks: vec![
            check(
                "quadratic reaches the accuracy target in at least 90% of seeds",
                quad_share >= 0.9,
                format!("{:.0}% of {} seeds; finals {quad:.4?}", quad_share * 100.0, quad.len()),
            ),
            check(
                "linear ends in [0.70, target) in at least 80% of seeds",
                lin_share >= 0.8,
                format!("{:.0}% of {} seeds; finals {lin:.4?}", lin_share * 100.0, lin.len()),
            ),
            check("bootstrap rounds run one epoch", bootstrap_ok, String::new()),
            check(
                "bootstrap accuracy within [0.20, 0.35]",
                anchor_ok,
                format!(
                    "range {:.4}..{:.4}",
                    anchors.iter().copied().fold(f64::INFINITY, f64::min),
                    anchors.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                ),
            ),
        ],
        runs,
    })
}

/// Runs the serving scenario for seeds `1..=seeds` under roma and rules.
pub fn replicate_serving(base: &ScenarioConfig, seeds: u64) -> Result<Report, ReplicateError> {
    let mut runs = Vec::new();
    let mut breaches = Vec::new();
    for seed in 1..=seeds {
        for p in ["roma", "rules"] {
            let mut cfg = base.with_policy(p)?;
            cfg.seed = seed;
            let (s, out) = summary_of(&cfg)?;
            let audit = out.audit.expect("serving run has an audit");
            for b in audit_requests(&out.log, &audit) {
                breaches.push(format!("seed {seed} {p}: {b}"));
            }
            runs.push(s);
        }
    }
    let of = |p: &str| runs.iter().filter(|s| s.policy == p).collect::<Vec<_>>();
    let (roma, rules) = (of("roma"), of("rules"));
    let total = |v: &[&Summary]| v.iter().map(|s| s.violations).sum::<usize>();
    let cores = |v: &[&Summary]| v.iter().filter_map(|s| s.mean_cores).sum::<f64>() / v.len().max(1) as f64;
    let (rv, bv) = (total(&roma), total(&rules));
    let (rc, bc) = (cores(&roma), cores(&rules));
    let baseline_min = rules.iter().map(|s| s.violations).min().unwrap_or(0);
    let reduction = if bv > 0 { 1.0 - rv as f64 / bv as f64 } else { 0.0 };
    Ok(Report {
        experiment: Experiment::Serving,
        checks: vec![
            check(
                "rules baseline violates in at least 10 windows on every seed",
                baseline_min >= 10,
                format!("fewest baseline violations on a seed: {baseline_min}"),
            ),
            check(
                "roma has at least 50% fewer violating windows than rules",
                bv > 0 && reduction >= 0.5,
                format!("roma {rv}, rules {bv}, reduction {:.1}%", reduction * 100.0),
            ),
            check(
                "roma allocates no more cores on average than rules",
                rc <= bc,
                format!("roma {rc:.3}, rules {bc:.3} ({:.1}% fewer)", (1.0 - rc / bc) * 100.0),
            ),
            check(
                "serving invariants hold on every run",
                breaches.is_empty(),
                breaches.join("; "),
            ),
        ],
        runs,
    })
}

pub fn replicate(exp: Experiment) -> Result<Report, ReplicateError> {
    let base = exp.scenario();
    match exp {
        Experiment::Fig1 => replicate_fig1(&base),
        Experiment::Table1 => replicate_table1(&base, TABLE1_SEEDS),
        Experiment::Serving => replicate_serving(&base, SERVING_SEEDS),
    }
}
