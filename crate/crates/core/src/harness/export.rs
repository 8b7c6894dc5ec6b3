use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::scenario::ScenarioKind;
use crate::serve::WindowRow;
use crate::sim::MetricsLog;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub job_id: String,
    pub submit: f64,
    pub deadline_abs: f64,
    pub finish: Option<f64>,
    pub violated: bool,
    pub mean_cores: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRow {
    pub r: u32,
    pub target: Option<f64>,
    pub e_r: u32,
    pub s_r: u32,
    pub ac_fit: f64,
    pub ac_eval: f64,
}

/// Result rows of one run; the column set depends on the scenario kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "rows", rename_all = "lowercase")]
pub enum Rows {
    Batch(Vec<BatchRow>),
    Federation(Vec<RoundRow>),
    Serving(Vec<WindowRow>),
}

pub const BATCH_COLUMNS: [&str; 6] = ["job_id", "submit", "deadline_abs", "finish", "violated", "mean_cores"];
pub const ROUND_COLUMNS: [&str; 6] = ["r", "target", "e_r", "s_r", "ac_fit", "ac_eval"];
pub const WINDOW_COLUMNS: [&str; 5] = ["service", "window_start", "agg_rt", "violated", "cores"];

impl Rows {
    pub fn batch(log: &MetricsLog) -> Rows {
        Rows::Batch(
            log.jobs
                .iter()
                .map(|j| BatchRow {
                    job_id: j.job_id.clone(),
                    submit: j.submit.secs(),
                    deadline_abs: j.deadline_abs.secs(),
                    finish: j.finish.map(|f| f.secs()),
                    violated: j.violated,
                    mean_cores: j.mean_cores,
                })
                .collect(),
        )
    }

    pub fn federation(log: &MetricsLog) -> Rows {
        Rows::Federation(
            log.rounds
                .iter()
                .map(|r| RoundRow {
                    r: r.r,
                    target: r.target,
                    e_r: r.e_r,
                    s_r: r.s_r,
                    ac_fit: r.ac_fit,
                    ac_eval: r.ac_eval,
                })
                .collect(),
        )
    }

    pub fn kind(&self) -> ScenarioKind {
        match self {
            Rows::Batch(_) => ScenarioKind::Batch,
            Rows::Federation(_) => ScenarioKind::Federation,
            Rows::Serving(_) => ScenarioKind::Serving,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let opt = |v: Option<f64>| v.map(fmt9).unwrap_or_default();
        let res: Result<(), csv::Error> = (|| {
            match self {
                Rows::Batch(rows) => {
                    w.write_record(BATCH_COLUMNS)?;
                    for r in rows {
                        w.write_record([
                            r.job_id.clone(),
                            fmt9(r.submit),
                            fmt9(r.deadline_abs),
                            opt(r.finish),
                            r.violated.to_string(),
                            fmt9(r.mean_cores),
                        ])?;
                    }
                }
                Rows::Federation(rows) => {
                    w.write_record(ROUND_COLUMNS)?;
                    for r in rows {
                        w.write_record([
                            r.r.to_string(),
                            opt(r.target),
                            r.e_r.to_string(),
                            r.s_r.to_string(),
                            fmt9(r.ac_fit),
                            fmt9(r.ac_eval),
                        ])?;
                    }
                }
                Rows::Serving(rows) => {
                    w.write_record(WINDOW_COLUMNS)?;
                    for r in rows {
                        w.write_record([
                            r.service.clone(),
                            fmt9(r.window_start),
                            opt(r.agg_rt),
                            r.violated.to_string(),
                            opt(r.cores),
                        ])?;
                    }
                }
            }
            Ok(())
        })();
        res.expect("writing to memory cannot fail");
        String::from_utf8(w.into_inner().expect("in-memory buffer")).expect("csv output is utf-8")
    }

    /// Parses CSV written by [`Rows::to_csv`].
    pub fn from_csv(kind: ScenarioKind, text: &str) -> Result<Rows, String> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| e.to_string())?
            .iter()
            .map(String::from)
            .collect();
        let expected: &[&str] = match kind {
            ScenarioKind::Batch => &BATCH_COLUMNS,
            ScenarioKind::Federation => &ROUND_COLUMNS,
            ScenarioKind::Serving => &WINDOW_COLUMNS,
        };
        if header != expected {
            return Err(format!("unexpected columns {header:?}, expected {expected:?}"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| format!("{s:?}: {e}"));
        let opt = |s: &str| if s.is_empty() { Ok(None) } else { num(s).map(Some) };
        let int = |s: &str| s.parse::<u32>().map_err(|e| format!("{s:?}: {e}"));
        let flag = |s: &str| s.parse::<bool>().map_err(|e| format!("{s:?}: {e}"));
        let records: Vec<csv::StringRecord> = rdr.records().collect::<Result<_, _>>().map_err(|e| e.to_string())?;
        Ok(match kind {
            ScenarioKind::Batch => Rows::Batch(
                records
                    .iter()
                    .map(|r| {
                        Ok(BatchRow {
                            job_id: r[0].to_string(),
                            submit: num(&r[1])?,
                            deadline_abs: num(&r[2])?,
                            finish: opt(&r[3])?,
                            violated: flag(&r[4])?,
                            mean_cores: num(&r[5])?,
                        })
                    })
                    .collect::<Result<_, String>>()?,
            ),
            ScenarioKind::Federation => Rows::Federation(
                records
                    .iter()
                    .map(|r| {
                        Ok(RoundRow {
                            r: int(&r[0])?,
                            target: opt(&r[1])?,
                            e_r: int(&r[2])?,
                            s_r: int(&r[3])?,
                            ac_fit: num(&r[4])?,
                            ac_eval: num(&r[5])?,
                        })
                    })
                    .collect::<Result<_, String>>()?,
            ),
            ScenarioKind::Serving => Rows::Serving(
                records
                    .iter()
                    .map(|r| {
                        Ok(WindowRow {
                            service: r[0].to_string(),
                            window_start: num(&r[1])?,
                            agg_rt: opt(&r[2])?,
                            violated: flag(&r[3])?,
                            cores: opt(&r[4])?,
                        })
                    })
                    .collect::<Result<_, String>>()?,
            ),
        })
    }
}

/// Renders a float with 9 significant digits, trailing zeros trimmed.
pub fn fmt9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-5..15).contains(&mag) {
        return format!("{x:.8e}");
    }
    let s = format!("{:.*}", (8 - mag).max(0) as usize, x);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobOutcome {
    pub job_id: String,
    pub deadline_abs: f64,
    pub finish: Option<f64>,
    /// Finish time over absolute deadline.
    pub deadline_ratio: Option<f64>,
    pub violated: bool,
}

/// Headline numbers of one run, computed from its exported rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub kind: ScenarioKind,
    pub policy: String,
    pub seed: u64,
    /// Batch: late or unfinished jobs. Federation: 1 if the last round missed its target. Serving: violating windows.
    pub violations: usize,
    pub mean_cores: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub jobs: Vec<JobOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_window_rt: Option<f64>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, sum) = values.fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    (n > 0).then(|| sum / n as f64)
}

impl Summary {
    pub fn from_rows(policy: &str, seed: u64, rows: &Rows) -> Summary {
        let mut s = Summary {
            kind: rows.kind(),
            policy: policy.to_string(),
            seed,
            violations: 0,
            mean_cores: None,
            jobs: Vec::new(),
            final_accuracy: None,
            max_window_rt: None,
        };
        match rows {
            Rows::Batch(rows) => {
                s.violations = rows.iter().filter(|r| r.violated).count();
                s.mean_cores = mean(rows.iter().map(|r| r.mean_cores));
                s.jobs = rows
                    .iter()
                    .map(|r| JobOutcome {
                        job_id: r.job_id.clone(),
                        deadline_abs: r.deadline_abs,
                        finish: r.finish,
                        deadline_ratio: r.finish.map(|f| f / r.deadline_abs),
                        violated: r.violated,
                    })
                    .collect();
            }
            Rows::Federation(rows) => {
                let last = rows.last();
                s.final_accuracy = last.map(|r| r.ac_eval);
                s.violations = last
                    .and_then(|r| r.target.map(|t| usize::from(r.ac_eval < t)))
                    .unwrap_or(0);
            }
            Rows::Serving(rows) => {
                s.violations = rows.iter().filter(|r| r.violated).count();
                s.max_window_rt = rows.iter().filter_map(|r| r.agg_rt).reduce(f64::max);
                let mut services: Vec<&str> = rows.iter().map(|r| r.service.as_str()).collect();
                services.dedup();
                let per: Vec<f64> = services
                    .iter()
                    .filter_map(|id| mean(rows.iter().filter(|r| r.service == *id).filter_map(|r| r.cores)))
                    .collect();
                s.mean_cores = (!per.is_empty()).then(|| per.iter().sum());
            }
        }
        s
    }

    /// One-line human summary.
    pub fn line(&self) -> String {
        let mut out = format!(
            "{} {} seed={} violations={}",
            self.kind.as_str(),
            self.policy,
            self.seed,
            self.violations
        );
        if let Some(c) = self.mean_cores {
            out += &format!(" mean_cores={}", fmt9(c));
        }
        if let Some(a) = self.final_accuracy {
            out += &format!(" final_accuracy={}", fmt9(a));
        }
        if let Some(m) = self.max_window_rt {
            out += &format!(" max_window_rt={}", fmt9(m));
        }
        for j in &self.jobs {
            match j.finish {
                Some(f) => out += &format!(" {}={}/{}", j.job_id, fmt9(f), fmt9(j.deadline_abs)),
                None => out += &format!(" {}=unfinished/{}", j.job_id, fmt9(j.deadline_abs)),
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format {other:?} (expected csv or json)")),
        }
    }
}

/// Writes `bytes` to a temporary file beside `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Writes rows and the summary derived from the written file. Returns the summary and the paths.
pub fn export_results(
    rows: &Rows,
    policy: &str,
    seed: u64,
    format: Format,
    dir: &Path,
    stem: &str,
) -> std::io::Result<(Summary, Vec<std::path::PathBuf>)> {
    std::fs::create_dir_all(dir)?;
    let (data_path, reread) = match format {
        Format::Csv => {
            let path = dir.join(format!("{stem}.{policy}.csv"));
            write_atomic(&path, rows.to_csv().as_bytes())?;
            let text = std::fs::read_to_string(&path)?;
            let back = Rows::from_csv(rows.kind(), &text).map_err(std::io::Error::other)?;
            (path, back)
        }
        Format::Json => {
            let path = dir.join(format!("{stem}.{policy}.json"));
            let text = serde_json::to_string_pretty(rows).map_err(std::io::Error::other)?;
            write_atomic(&path, text.as_bytes())?;
            let back: Rows = serde_json::from_str(&std::fs::read_to_string(&path)?).map_err(std::io::Error::other)?;
            (path, back)
        }
    };
    let summary = Summary::from_rows(policy, seed, &reread);
    let summary_path = dir.join(format!("{stem}.{policy}.summary.json"));
    let text = serde_json::to_string_pretty(&summary).map_err(std::io::Error::other)?;
    write_atomic(&summary_path, text.as_bytes())?;
    Ok((summary, vec![data_path, summary_path]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt9(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt9(123456.789012), "123456.789");
        assert_eq!(fmt9(300.0), "300");
        assert_eq!(fmt9(0.0), "0");
        assert_eq!(fmt9(-2.5), "-2.5");
        assert_eq!(fmt9(1e-9), "1.00000000e-9");
    }

    #[test]
    fn batch_csv_round_trip() {
        let rows = Rows::Batch(vec![
            BatchRow {
                job_id: "a".into(),
                submit: 0.0,
                deadline_abs: 300.0,
                finish: Some(290.5),
                violated: false,
                mean_cores: 12.25,
            },
            BatchRow {
                job_id: "b".into(),
                submit: 40.0,
                deadline_abs: 340.0,
                finish: None,
                violated: true,
                mean_cores: 0.0,
            },
        ]);
        let csv = rows.to_csv();
        assert!(csv.starts_with("job_id,submit,deadline_abs,finish,violated,mean_cores\n"));
        assert_eq!(Rows::from_csv(ScenarioKind::Batch, &csv).unwrap(), rows);
        let s = Summary::from_rows("edf", 1, &rows);
        assert_eq!(s.violations, 1);
        assert_eq!(s.jobs[0].deadline_ratio, Some(290.5 / 300.0));
    }

    #[test]
    fn federation_columns_and_summary() {
        let rows = Rows::Federation(vec![
            RoundRow {
                r: 1,
                target: None,
                e_r: 1,
                s_r: 1,
                ac_fit: 0.2,
                ac_eval: 0.19,
            },
            RoundRow {
                r: 2,
                target: Some(0.8),
                e_r: 3,
                s_r: 4,
                ac_fit: 0.81,
                ac_eval: 0.8,
            },
        ]);
        let csv = rows.to_csv();
        assert!(csv.starts_with("r,target,e_r,s_r,ac_fit,ac_eval\n1,,1,1,0.2,0.19\n"));
        let s = Summary::from_rows("quadratic", 1, &rows);
        assert_eq!(s.final_accuracy, Some(0.8));
        assert_eq!(s.violations, 0);
    }

    #[test]
    fn serving_mean_cores_sums_services() {
        let row = |svc: &str, start: f64, cores: f64, violated: bool| WindowRow {
            service: svc.into(),
            window_start: start,
            agg_rt: Some(0.3),
            violated,
            cores: Some(cores),
        };
        let rows = Rows::Serving(vec![
            row("a", 0.0, 1.0, false),
            row("a", 10.0, 3.0, true),
            row("b", 0.0, 2.0, false),
            row("b", 10.0, 2.0, false),
        ]);
        let s = Summary::from_rows("roma", 1, &rows);
        assert_eq!(s.violations, 1);
        assert_eq!(s.mean_cores, Some(4.0));
        assert_eq!(Rows::from_csv(ScenarioKind::Serving, &rows.to_csv()).unwrap(), rows);
    }

    #[test]
    fn rejects_wrong_columns() {
        assert!(Rows::from_csv(ScenarioKind::Batch, "a,b\n1,2\n").is_err());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
