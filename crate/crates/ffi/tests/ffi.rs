//! The C ABI from Rust and from a C program built against the generated header.

use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use starjunction_ffi::*;

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn last_error() -> String {
    let p = sj_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn load(name: &str) -> *mut SjProblem {
    let path = CString::new(config_path(name).to_str().unwrap()).unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { sj_problem_from_file(path.as_ptr(), &mut p) }, SjStatus::Ok);
    assert!(!p.is_null());
    p
}

#[test]
fn problems_regimes_and_rates() {
    for (name, regime) in [("default.json", SjRegime::A), ("regime_b.json", SjRegime::B), ("regime_c.json", SjRegime::C)] {
        let p = load(name);
        assert_eq!(unsafe { sj_problem_regime(p) }, regime);
        let (mut a, mut b) = (0.0, 0.0);
        assert_eq!(unsafe { sj_mu(p, 0.1, &mut a) }, SjStatus::Ok);
        assert_eq!(unsafe { sj_mu(p, 0.01, &mut b) }, SjStatus::Ok);
        assert!(a > 0.0 && b / 0.01 < a / 0.1, "{name}: {a} {b}");
        unsafe { sj_problem_free(p) };
    }
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { sj_problem_default(&mut p) }, SjStatus::Ok);
    let mut mu = 0.0;
    assert_eq!(unsafe { sj_mu(p, 0.1, &mut mu) }, SjStatus::Ok);
    assert!((mu - 0.1f64.powf(1.375)).abs() < 1e-15);
    assert_eq!(unsafe { sj_mu(p, -1.0, &mut mu) }, SjStatus::Config);
    unsafe { sj_problem_free(p) };
    assert_eq!(unsafe { sj_problem_regime(ptr::null()) }, SjRegime::Unsupported);
}

#[test]
fn errors_are_codes_with_messages() {
    sj_clear_error();
    assert!(sj_last_error_message().is_null());
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { sj_problem_from_json(ptr::null(), &mut p) }, SjStatus::InvalidArgument);
    assert!(last_error().contains("null"));
    let bad = CString::new("{\"geometry\": 3}").unwrap();
    assert_eq!(unsafe { sj_problem_from_json(bad.as_ptr(), &mut p) }, SjStatus::Config);
    assert!(p.is_null());
    let missing = CString::new("/nonexistent/config.json").unwrap();
    assert_eq!(unsafe { sj_problem_from_file(missing.as_ptr(), &mut p) }, SjStatus::Config);
    assert!(last_error().contains("nonexistent"));
    let mut mu = 0.0;
    assert_eq!(unsafe { sj_mu(ptr::null(), 0.1, &mut mu) }, SjStatus::InvalidArgument);
    unsafe {
        sj_problem_free(ptr::null_mut());
        sj_report_free(ptr::null_mut());
        sj_string_free(ptr::null_mut());
    }
}

#[test]
fn synthetic_study_through_the_abi() {
    let p = load("default.json");
    assert_eq!(unsafe { sj_problem_set_time_steps(p, 4) }, SjStatus::Ok);
    let eps = [0.2, 0.1, 0.05];
    let mut o = sj_study_options_default();
    o.synthetic = 1;
    o.synthetic_c = 0.5;
    o.synthetic_p = 1.5;
    let mut r = ptr::null_mut();
    let st = unsafe { sj_convergence_run(p, eps.as_ptr(), 3, &o, ptr::null(), &mut r) };
    assert_eq!(st, SjStatus::Ok, "{}", last_error());
    assert_eq!(unsafe { sj_report_rows(r) }, 3);
    let mut order = 0.0;
    assert_eq!(unsafe { sj_report_order(r, SjColumn::L2H1, &mut order) }, SjStatus::Ok);
    assert!((order - 1.5).abs() < 1e-6);
    let mut row = SjErrorRow { epsilon: 0.0, max_l2: 0.0, l2h1: 0.0, node_grad: 0.0, mu: 0.0, ok: 0 };
    assert_eq!(unsafe { sj_report_row(r, 1, &mut row) }, SjStatus::Ok);
    assert_eq!((row.epsilon, row.ok), (0.1, 1));
    assert_eq!(unsafe { sj_report_row(r, 9, &mut row) }, SjStatus::InvalidArgument);
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { sj_report_json(r, &mut json) }, SjStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(unsafe { CStr::from_ptr(json) }.to_str().unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    unsafe {
        sj_string_free(json);
        sj_report_free(r);
    }

    let mut r = ptr::null_mut();
    assert_eq!(unsafe { sj_convergence_run(p, ptr::null(), 0, &o, ptr::null(), &mut r) }, SjStatus::Config);
    assert!(r.is_null());
    o.order = 7;
    assert_eq!(unsafe { sj_convergence_run(p, eps.as_ptr(), 3, &o, ptr::null(), &mut r) }, SjStatus::Config);
    unsafe { sj_problem_free(p) };
}

#[test]
fn validation_through_the_abi() {
    let p = load("regime_c.json");
    assert_eq!(unsafe { sj_problem_set_time_steps(p, 10) }, SjStatus::Ok);
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { sj_validate(p, 5, &mut json) }, SjStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(unsafe { CStr::from_ptr(json) }.to_str().unwrap()).unwrap();
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
    unsafe {
        sj_string_free(json);
        sj_problem_free(p);
    }

    let mut cfg: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(config_path("default.json")).unwrap()).unwrap();
    cfg["nonlinearities"]["k"] = serde_json::json!({"preset": "linear", "slope": -50.0});
    cfg["time"]["steps"] = 10.into();
    let s = CString::new(cfg.to_string()).unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { sj_problem_from_json(s.as_ptr(), &mut p) }, SjStatus::Ok);
    assert_eq!(unsafe { sj_validate(p, 5, ptr::null_mut()) }, SjStatus::ValidationFailed);
    assert!(last_error().contains("nonlinearity-bounds"));
    unsafe { sj_problem_free(p) };
}

/// Directory holding the library artifacts of the current profile.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn header_declares_the_abi() {
    let header = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/starjunction.h")).unwrap();
    for name in [
        "sj_problem_from_json",
        "sj_problem_free",
        "sj_convergence_run",
        "sj_report_free",
        "sj_validate",
        "sj_last_error_message",
        "sj_string_free",
        "SJ_STATUS_VALIDATION_FAILED = 4",
        "typedef struct SjProblem SjProblem",
    ] {
        assert!(header.contains(name), "{name} missing from the header");
    }
}

#[test]
fn c_program_links_against_the_static_library() {
    let lib = artifact_dir().join("libstarjunction_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if !lib.exists() || Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let status = Command::new(&cc)
        .arg(root.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(root.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).arg(config_path("default.json")).output().unwrap();
    assert!(out.status.success(), "exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("order 2.0"));
}
