use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use mlrm_ffi::*;

const BATCH: &str = r#"
kind = "batch"
duration = 200.0

[[cluster]]
id = "n0"
cores = 8.0
memory = 32.0

[policy]
id = "edf"

[[batch.jobs]]
id = "A"
submit_time = 0.0
deadline = 100.0
memory_request = 8.0

[[batch.jobs.stages]]
id = "map"
records = 1000.0
rate = 10.0
"#;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = mlrm_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn parse(text: &str) -> *mut MlrmScenario {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { mlrm_scenario_parse(c(text).as_ptr(), &mut s) }, MlrmStatus::Ok);
    s
}

fn summary(run: *const MlrmRun) -> serde_json::Value {
    let mut json: *mut c_char = ptr::null_mut();
    assert_eq!(unsafe { mlrm_run_summary_json(run, &mut json) }, MlrmStatus::Ok);
    let v = serde_json::from_str(unsafe { CStr::from_ptr(json) }.to_str().unwrap()).unwrap();
    unsafe { mlrm_string_free(json) };
    v
}

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/scenarios")
        .join(name)
}

#[test]
fn run_and_summarize() {
    let s = parse(BATCH);
    let mut run = ptr::null_mut();
    assert_eq!(unsafe { mlrm_run(s, &mut run) }, MlrmStatus::Ok);
    let v = summary(run);
    assert_eq!(v["violations"], 0);
    assert_eq!(v["policy"], "edf");
    assert!(mlrm_last_error().is_null());
    unsafe {
        mlrm_run_free(run);
        mlrm_scenario_free(s);
    }
}

#[test]
fn load_export_and_reload_match() {
    let mut s = ptr::null_mut();
    let path = c(bundled("table1.toml").to_str().unwrap());
    assert_eq!(unsafe { mlrm_scenario_load(path.as_ptr(), &mut s) }, MlrmStatus::Ok);
    assert_eq!(unsafe { mlrm_scenario_set_seed(s, 7) }, MlrmStatus::Ok);
    let mut run = ptr::null_mut();
    assert_eq!(unsafe { mlrm_run(s, &mut run) }, MlrmStatus::Ok);
    let dir = tempfile::tempdir().unwrap();
    let d = c(dir.path().to_str().unwrap());
    let status = unsafe { mlrm_run_export(run, d.as_ptr(), c("t").as_ptr(), MlrmFormat::Json) };
    assert_eq!(status, MlrmStatus::Ok);
    let written: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("t.quadratic.summary.json")).unwrap()).unwrap();
    assert_eq!(written, summary(run));
    assert_eq!(written["seed"], 7);
    unsafe {
        mlrm_run_free(run);
        mlrm_scenario_free(s);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { mlrm_scenario_parse(c("kind = ").as_ptr(), &mut s) },
        MlrmStatus::Parse
    );
    assert!(s.is_null());
    assert!(!last_error().is_empty());

    let missing = c("/nonexistent/x.toml");
    assert_eq!(unsafe { mlrm_scenario_load(missing.as_ptr(), &mut s) }, MlrmStatus::Io);
    assert_eq!(
        unsafe { mlrm_scenario_parse(ptr::null(), &mut s) },
        MlrmStatus::NullArgument
    );
    assert_eq!(
        unsafe { mlrm_run(ptr::null(), &mut ptr::null_mut()) },
        MlrmStatus::NullArgument
    );

    let bad_utf8 = [0xffu8, 0xfe, 0];
    let status = unsafe { mlrm_scenario_parse(bad_utf8.as_ptr().cast(), &mut s) };
    assert_eq!(status, MlrmStatus::InvalidUtf8);

    let s = parse(BATCH);
    assert_eq!(
        unsafe { mlrm_scenario_set_policy(s, c("rules").as_ptr()) },
        MlrmStatus::Validation
    );
    assert!(last_error().contains("policy.id"));
    assert_eq!(unsafe { mlrm_scenario_set_seed(s, u64::MAX) }, MlrmStatus::Validation);
    // failed edits leave the scenario usable
    let mut run = ptr::null_mut();
    assert_eq!(unsafe { mlrm_run(s, &mut run) }, MlrmStatus::Ok);
    assert_eq!(summary(run)["policy"], "edf");
    unsafe {
        mlrm_run_free(run);
        mlrm_scenario_free(s);
        mlrm_scenario_free(ptr::null_mut());
        mlrm_run_free(ptr::null_mut());
        mlrm_string_free(ptr::null_mut());
    }
}

#[test]
fn contention_through_the_abi() {
    let cores = [6.0, 6.0, 4.0];
    let deadlines = [50.0, 10.0, 30.0];
    let mut grants = [0.0; 3];
    let st = unsafe {
        mlrm_resolve_contention(
            cores.as_ptr(),
            deadlines.as_ptr(),
            3,
            8.0,
            MlrmStrategy::Edf,
            grants.as_mut_ptr(),
        )
    };
    assert_eq!(st, MlrmStatus::Ok);
    assert_eq!(grants, [0.0, 6.0, 2.0]);
    let st = unsafe {
        mlrm_resolve_contention(
            cores.as_ptr(),
            deadlines.as_ptr(),
            3,
            8.0,
            MlrmStrategy::Proportional,
            grants.as_mut_ptr(),
        )
    };
    assert_eq!(st, MlrmStatus::Ok);
    assert!((grants.iter().sum::<f64>() - 8.0).abs() < 1e-12);
    assert!((grants[0] / grants[2] - 1.5).abs() < 1e-12);

    let neg = [-1.0];
    let st = unsafe {
        mlrm_resolve_contention(
            neg.as_ptr(),
            deadlines.as_ptr(),
            1,
            8.0,
            MlrmStrategy::Edf,
            grants.as_mut_ptr(),
        )
    };
    assert_eq!(st, MlrmStatus::OutOfRange);
    let st = unsafe { mlrm_resolve_contention(ptr::null(), ptr::null(), 0, 8.0, MlrmStrategy::Edf, ptr::null_mut()) };
    assert_eq!(st, MlrmStatus::Ok);
}

#[test]
fn federation_helpers() {
    let mut target = 0.0;
    let st = unsafe { mlrm_target_accuracy(10, 10, 0.8, MlrmTrajectory::Linear, 2, 0.5, &mut target) };
    assert_eq!(st, MlrmStatus::Ok);
    assert_eq!(target, 0.8);
    let st = unsafe { mlrm_target_accuracy(6, 10, 0.8, MlrmTrajectory::Linear, 2, 0.5, &mut target) };
    assert_eq!(st, MlrmStatus::Ok);
    assert!((target - 0.65).abs() < 1e-12);
    let st = unsafe { mlrm_target_accuracy(2, 10, 0.8, MlrmTrajectory::Quadratic, 2, 0.5, &mut target) };
    assert_eq!(st, MlrmStatus::OutOfRange);
    let st = unsafe { mlrm_target_accuracy(5, 10, 1.5, MlrmTrajectory::Quadratic, 2, 0.5, &mut target) };
    assert_eq!(st, MlrmStatus::Validation);

    let older = MlrmRound {
        round: 1,
        epochs: 1,
        cumulative_epochs: 1,
        accuracy: 0.40,
    };
    let last = MlrmRound {
        round: 2,
        epochs: 1,
        cumulative_epochs: 2,
        accuracy: 0.50,
    };
    let mut epochs = 0;
    assert_eq!(
        unsafe { mlrm_estimate_epochs(0.70, &older, &last, 16, &mut epochs) },
        MlrmStatus::Ok
    );
    assert_eq!(epochs, 2);
    assert_eq!(
        unsafe { mlrm_estimate_epochs(0.70, &last, &older, 16, &mut epochs) },
        MlrmStatus::OutOfRange
    );
}

#[test]
fn header_matches_the_exports() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/mlrm.h")).unwrap();
    for f in [
        "mlrm_last_error",
        "mlrm_string_free",
        "mlrm_scenario_load",
        "mlrm_scenario_parse",
        "mlrm_scenario_set_seed",
        "mlrm_scenario_set_policy",
        "mlrm_scenario_free",
        "mlrm_run(",
        "mlrm_run_free",
        "mlrm_run_summary_json",
        "mlrm_run_export",
        "mlrm_resolve_contention",
        "mlrm_target_accuracy",
        "mlrm_estimate_epochs",
        "typedef struct MlrmScenario MlrmScenario",
    ] {
        assert!(header.contains(f), "{f} missing from mlrm.h");
    }
}

fn static_lib() -> Option<PathBuf> {
    // tests run from target/<profile>/deps
    let deps = std::env::current_exe().ok()?.parent()?.to_path_buf();
    [deps.join("libmlrm_ffi.a"), deps.parent()?.join("libmlrm_ffi.a")]
        .into_iter()
        .find(|p| p.exists())
}

#[test]
fn c_program_links_and_runs() {
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler, skipping");
        return;
    }
    let Some(lib) = static_lib() else {
        eprintln!("static library not built, skipping");
        return;
    };
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let out = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(root.join("include"))
        .arg(root.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(
        run.status.success(),
        "{}{}",
        String::from_utf8_lossy(&run.stdout),
        String::from_utf8_lossy(&run.stderr)
    );
}
