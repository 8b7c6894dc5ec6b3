//! Command-line front end.
//!
//! Flag precedence: values in the scenario file are the base; `--seed` replaces `seed`,
//! `--policy` replaces `policy.id`, and `--strategy` (batch scenarios only) replaces `policy.id`
//! after `--policy`.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::contention::ContentionStrategy;
use crate::harness::{
    export_results, fmt9, load_scenario, replicate::replicate, run_scenario, scenario_schema, write_atomic, Experiment,
    Format, ScenarioConfig, ScenarioError, ScenarioKind, Summary,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_ACCEPTANCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "mlrm",
    version,
    about = "Simulate deadline-, accuracy- and SLA-driven ML resource management"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Directory for result files (default: next to the scenario).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Row file format.
    #[arg(long, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write its results.
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
        /// Overrides the policy id.
        #[arg(long)]
        policy: Option<String>,
        /// Contention strategy for batch scenarios (edf or proportional).
        #[arg(long)]
        strategy: Option<ContentionStrategy>,
    },
    /// Run several policies on the same workload and print a side-by-side table.
    Compare {
        scenario: PathBuf,
        /// Comma-separated policy ids; the last one is the baseline for relative numbers.
        #[arg(long, value_delimiter = ',', required = true)]
        policies: Vec<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Re-run a bundled experiment and check it against its acceptance thresholds.
    Replicate {
        experiment: Experiment,
        /// Directory for the JSON report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the scenario JSON schema, or write it to a file.
    Schema {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Scenario(_) => EXIT_VALIDATION,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

fn out_dir(scenario: &Path, out: &Option<PathBuf>) -> PathBuf {
    out.clone().unwrap_or_else(|| match scenario.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    })
}

fn stem(scenario: &Path) -> String {
    scenario
        .file_stem()
        .map_or_else(|| "scenario".into(), |s| s.to_string_lossy().into_owned())
}

/// Applies command-line overrides to a loaded scenario and re-validates it.
pub fn apply_overrides(
    cfg: &ScenarioConfig,
    seed: Option<u64>,
    policy: Option<&str>,
    strategy: Option<ContentionStrategy>,
) -> Result<ScenarioConfig, ScenarioError> {
    let mut c = cfg.clone();
    if let Some(s) = seed {
        c.seed = s;
    }
    if let Some(p) = policy {
        c.policy.id = p.to_string();
    }
    if let Some(s) = strategy {
        if c.kind != ScenarioKind::Batch {
            return Err(ScenarioError::Validation {
                field: "--strategy".into(),
                message: format!("only applies to batch scenarios, not {}", c.kind.as_str()),
            });
        }
        c.policy.id = match s {
            ContentionStrategy::Edf => "edf",
            ContentionStrategy::Proportional => "proportional",
        }
        .into();
    }
    c.validate()?;
    Ok(c)
}

fn run_one(cfg: &ScenarioConfig, dir: &Path, stem: &str, format: Format) -> Result<Summary, CliError> {
    log::info!(
        "running {} scenario with policy {} (seed {})",
        cfg.kind.as_str(),
        cfg.policy.id,
        cfg.seed
    );
    let out = run_scenario(cfg).map_err(internal)?;
    let (summary, paths) = export_results(&out.rows, &cfg.policy.id, cfg.seed, format, dir, stem).map_err(internal)?;
    for p in paths {
        log::info!("wrote {}", p.display());
    }
    Ok(summary)
}

fn compare_table(kind: ScenarioKind, rows: &[Summary]) -> String {
    let baseline = rows.last().expect("at least one policy");
    let mut header = vec!["policy", "violations", "mean_cores"];
    match kind {
        ScenarioKind::Batch => header.push("finish/deadline"),
        ScenarioKind::Federation => header.extend(["final_accuracy", "accuracy_delta"]),
        ScenarioKind::Serving => header.extend(["max_window_rt", "violation_reduction", "core_reduction"]),
    }
    let mut lines = vec![header.join("\t")];
    let pct = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{:.1}%", v * 100.0));
    for s in rows {
        let mut cells = vec![
            s.policy.clone(),
            s.violations.to_string(),
            s.mean_cores.map_or_else(|| "-".into(), fmt9),
        ];
        match kind {
            ScenarioKind::Batch => cells.push(
                s.jobs
                    .iter()
                    .map(|j| match j.finish {
                        Some(f) => format!("{}={}/{}", j.job_id, fmt9(f), fmt9(j.deadline_abs)),
                        None => format!("{}=unfinished/{}", j.job_id, fmt9(j.deadline_abs)),
                    })
                    .collect::<Vec<_>>()
                    .join(" "),
            ),
            ScenarioKind::Federation => {
                cells.push(s.final_accuracy.map_or_else(|| "-".into(), fmt9));
                let d = s.final_accuracy.zip(baseline.final_accuracy).map(|(a, b)| a - b);
                cells.push(d.map_or_else(|| "-".into(), fmt9));
            }
            ScenarioKind::Serving => {
                cells.push(s.max_window_rt.map_or_else(|| "-".into(), fmt9));
                let vr = (baseline.violations > 0).then(|| 1.0 - s.violations as f64 / baseline.violations as f64);
                let cr = s.mean_cores.zip(baseline.mean_cores).map(|(a, b)| 1.0 - a / b);
                cells.push(pct(vr));
                cells.push(pct(cr));
            }
        }
        lines.push(cells.join("\t"));
    }
    lines.join("\n") + "\n"
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Run {
            scenario,
            output,
            policy,
            strategy,
        } => {
            let base = load_scenario(&scenario)?;
            let cfg = apply_overrides(&base, output.seed, policy.as_deref(), strategy)?;
            let summary = run_one(&cfg, &out_dir(&scenario, &output.out), &stem(&scenario), output.format)?;
            writeln!(stdout, "{}", summary.line()).map_err(internal)?;
        }
        Command::Compare {
            scenario,
            policies,
            output,
        } => {
            let base = load_scenario(&scenario)?;
            let configs = policies
                .iter()
                .map(|p| apply_overrides(&base, output.seed, Some(p), None))
                .collect::<Result<Vec<_>, _>>()?;
            let dir = out_dir(&scenario, &output.out);
            let stem = stem(&scenario);
            let summaries = configs
                .iter()
                .map(|c| run_one(c, &dir, &stem, output.format))
                .collect::<Result<Vec<_>, _>>()?;
            let table = compare_table(base.kind, &summaries);
            write_atomic(&dir.join(format!("{stem}.compare.tsv")), table.as_bytes()).map_err(internal)?;
            write!(stdout, "{table}").map_err(internal)?;
        }
        Command::Replicate { experiment, out } => {
            let report = replicate(experiment).map_err(internal)?;
            for c in &report.checks {
                writeln!(
                    stdout,
                    "[{}] {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                )
                .map_err(internal)?;
            }
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(internal)?;
                let name = format!(
                    "{}.report.json",
                    serde_json::to_value(experiment)
                        .map_err(internal)?
                        .as_str()
                        .unwrap_or("report")
                );
                let text = serde_json::to_string_pretty(&report).map_err(internal)?;
                write_atomic(&dir.join(name), text.as_bytes()).map_err(internal)?;
            }
            if !report.passed() {
                for c in report.failed() {
                    eprintln!("failed: {}", c.name);
                }
                return Ok(EXIT_ACCEPTANCE);
            }
        }
        Command::Schema { out } => {
            let schema = scenario_schema();
            match out {
                Some(p) => write_atomic(&p, schema.as_bytes()).map_err(internal)?,
                None => writeln!(stdout, "{schema}").map_err(internal)?,
            }
        }
    }
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}
