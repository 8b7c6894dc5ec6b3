//! C interface to the `mlrm` simulator.
//!
//! Scenarios and run results are opaque handles owned by the caller and released with the
//! matching `*_free` function. Every fallible call returns an [`MlrmStatus`]; on failure the
//! message is available from [`mlrm_last_error`] on the same thread until the next call.
//! Strings handed out by the library are freed with [`mlrm_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use mlrm::contention::{resolve_contention, ContentionStrategy, Demand};
use mlrm::fed::{estimate_epochs, target_accuracy, FederationConfig, RoundState, Trajectory};
use mlrm::harness::{
    export_results, load_scenario, run_scenario, Format, RunOutput, ScenarioConfig, ScenarioError, Summary,
};
use mlrm::sim::SimTime;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlrmStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Validation = 5,
    Simulation = 6,
    OutOfRange = 7,
    Internal = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlrmStrategy {
    Edf = 0,
    Proportional = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlrmTrajectory {
    Linear = 0,
    Quadratic = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlrmFormat {
    Csv = 0,
    Json = 1,
}

/// One completed federation round as seen by the epoch estimator.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MlrmRound {
    pub round: u32,
    pub epochs: u32,
    /// Cumulative epochs through this round.
    pub cumulative_epochs: u32,
    pub accuracy: f64,
}

/// A parsed and validated scenario.
pub struct MlrmScenario(ScenarioConfig);

/// The result of one simulation run.
pub struct MlrmRun(RunOutput);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(MlrmStatus, String);

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        let status = match e {
            ScenarioError::Io { .. } => MlrmStatus::Io,
            ScenarioError::Parse(_) => MlrmStatus::Parse,
            ScenarioError::Validation { .. } => MlrmStatus::Validation,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MlrmStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MlrmStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            MlrmStatus::Internal
        }
    }
}

fn null(name: &str) -> Failure {
    Failure(MlrmStatus::NullArgument, format!("{name} is null"))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(MlrmStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(MlrmStatus::Internal, "string contains a NUL byte".into()))
}

/// Message for the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn mlrm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn mlrm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads and validates a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mlrm_scenario_load(path: *const c_char, out_scenario: *mut *mut MlrmScenario) -> MlrmStatus {
    guard(|| {
        let slot = out(out_scenario, "out_scenario")?;
        let cfg = load_scenario(Path::new(text(path, "path")?))?;
        *slot = Box::into_raw(Box::new(MlrmScenario(cfg)));
        Ok(())
    })
}

/// Parses and validates a scenario from TOML text.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mlrm_scenario_parse(toml: *const c_char, out_scenario: *mut *mut MlrmScenario) -> MlrmStatus {
    guard(|| {
        let slot = out(out_scenario, "out_scenario")?;
        let cfg = ScenarioConfig::from_toml_str(text(toml, "toml")?)?;
        *slot = Box::into_raw(Box::new(MlrmScenario(cfg)));
        Ok(())
    })
}

/// Replaces the seed. The scenario is left unchanged on failure.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mlrm_scenario_set_seed(scenario: *mut MlrmScenario, seed: u64) -> MlrmStatus {
    guard(|| {
        let s = out(scenario, "scenario")?;
        let mut cfg = s.0.clone();
        cfg.seed = seed;
        cfg.validate()?;
        s.0 = cfg;
        Ok(())
    })
}

/// Replaces the policy id. The scenario is left unchanged on failure.
///
/// # Safety
/// `scenario` must be a live handle and `policy` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mlrm_scenario_set_policy(scenario: *mut MlrmScenario, policy: *const c_char) -> MlrmStatus {
    guard(|| {
        let s = out(scenario, "scenario")?;
        s.0 = s.0.with_policy(text(policy, "policy")?)?;
        Ok(())
    })
}

/// # Safety
/// `scenario` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mlrm_scenario_free(scenario: *mut MlrmScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs a scenario to completion.
///
/// # Safety
/// `scenario` must be a live handle; `out_run` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mlrm_run(scenario: *const MlrmScenario, out_run: *mut *mut MlrmRun) -> MlrmStatus {
    guard(|| {
        let slot = out(out_run, "out_run")?;
        let cfg = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        let output = run_scenario(&cfg.0).map_err(|e| Failure(MlrmStatus::Simulation, e.to_string()))?;
        *slot = Box::into_raw(Box::new(MlrmRun(output)));
        Ok(())
    })
}

/// # Safety
/// `run` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mlrm_run_free(run: *mut MlrmRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Summary of a run as a JSON object. Free the string with [`mlrm_string_free`].
///
/// # Safety
/// `run` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mlrm_run_summary_json(run: *const MlrmRun, out_json: *mut *mut c_char) -> MlrmStatus {
    guard(|| {
        let slot = out(out_json, "out_json")?;
        let r = &run.as_ref().ok_or_else(|| null("run"))?.0;
        let summary = Summary::from_rows(&r.policy, r.seed, &r.rows);
        let json = serde_json::to_string(&summary).map_err(|e| Failure(MlrmStatus::Internal, e.to_string()))?;
        *slot = into_c_string(json)?;
        Ok(())
    })
}

/// Writes `{stem}.{policy}.csv|json` and its summary into `dir`.
///
/// # Safety
/// `run` must be a live handle; `dir` and `stem` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn mlrm_run_export(
    run: *const MlrmRun,
    dir: *const c_char,
    stem: *const c_char,
    format: MlrmFormat,
) -> MlrmStatus {
    guard(|| {
        let r = &run.as_ref().ok_or_else(|| null("run"))?.0;
        let format = match format {
            MlrmFormat::Csv => Format::Csv,
            MlrmFormat::Json => Format::Json,
        };
        export_results(
            &r.rows,
            &r.policy,
            r.seed,
            format,
            Path::new(text(dir, "dir")?),
            text(stem, "stem")?,
        )
        .map_err(|e| Failure(MlrmStatus::Io, e.to_string()))?;
        Ok(())
    })
}

/// Splits `capacity` cores among `len` demands. `grants` receives one value per demand.
///
/// # Safety
/// `cores`, `deadlines` and `grants` must each hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn mlrm_resolve_contention(
    cores: *const f64,
    deadlines: *const f64,
    len: usize,
    capacity: f64,
    strategy: MlrmStrategy,
    grants: *mut f64,
) -> MlrmStatus {
    guard(|| {
        let cores = slice(cores, len, "cores")?;
        let deadlines = slice(deadlines, len, "deadlines")?;
        if len > 0 && grants.is_null() {
            return Err(null("grants"));
        }
        if cores.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Failure(
                MlrmStatus::OutOfRange,
                "demands must be finite and non-negative".into(),
            ));
        }
        if !capacity.is_finite() || deadlines.iter().any(|d| !d.is_finite()) {
            return Err(Failure(
                MlrmStatus::OutOfRange,
                "capacity and deadlines must be finite".into(),
            ));
        }
        let demands: Vec<Demand> = cores
            .iter()
            .zip(deadlines)
            .enumerate()
            .map(|(executor, (&c, &d))| Demand {
                executor,
                cores: c,
                deadline: SimTime::new(d),
            })
            .collect();
        let strategy = match strategy {
            MlrmStrategy::Edf => ContentionStrategy::Edf,
            MlrmStrategy::Proportional => ContentionStrategy::Proportional,
        };
        for (i, g) in resolve_contention(&demands, capacity, strategy).into_iter().enumerate() {
            *grants.add(i) = g;
        }
        Ok(())
    })
}

/// Accuracy target for round `round` given the anchor `(anchor_round, anchor_accuracy)`.
///
/// # Safety
/// `out_target` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mlrm_target_accuracy(
    round: u32,
    rounds: u32,
    ac_sla: f64,
    trajectory: MlrmTrajectory,
    anchor_round: u32,
    anchor_accuracy: f64,
    out_target: *mut f64,
) -> MlrmStatus {
    guard(|| {
        let slot = out(out_target, "out_target")?;
        let trajectory = match trajectory {
            MlrmTrajectory::Linear => Trajectory::Linear,
            MlrmTrajectory::Quadratic => Trajectory::Quadratic,
        };
        let cfg = FederationConfig::new(rounds, ac_sla, trajectory);
        cfg.validate()
            .map_err(|(field, what)| Failure(MlrmStatus::Validation, format!("{field} must be {what}")))?;
        *slot = target_accuracy(round, &cfg, (anchor_round, anchor_accuracy))
            .map_err(|e| Failure(MlrmStatus::OutOfRange, e.to_string()))?;
        Ok(())
    })
}

/// Epochs for the next round from the two most recent rounds, capped at `e_max`.
///
/// # Safety
/// `older`, `last` must be readable and `out_epochs` writable.
#[no_mangle]
pub unsafe extern "C" fn mlrm_estimate_epochs(
    target: f64,
    older: *const MlrmRound,
    last: *const MlrmRound,
    e_max: u32,
    out_epochs: *mut u32,
) -> MlrmStatus {
    guard(|| {
        let slot = out(out_epochs, "out_epochs")?;
        let older = older.as_ref().ok_or_else(|| null("older"))?;
        let last = last.as_ref().ok_or_else(|| null("last"))?;
        if older.cumulative_epochs >= last.cumulative_epochs {
            return Err(Failure(
                MlrmStatus::OutOfRange,
                "cumulative epochs must increase".into(),
            ));
        }
        let state = |r: &MlrmRound| RoundState {
            r: r.round,
            e_r: r.epochs,
            s_r: r.cumulative_epochs,
            ac_r: r.accuracy,
        };
        *slot = estimate_epochs(target, [&state(older), &state(last)], e_max);
        Ok(())
    })
}
