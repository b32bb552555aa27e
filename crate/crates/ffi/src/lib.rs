//! C ABI for the starjunction solvers.
//!
//! Objects cross the boundary as opaque handles created by `sj_*_new`/`sj_*_from_*`
//! functions and released with the matching `sj_*_free`. Every fallible function
//! returns an [`SjStatus`] code; the message of the last failure on the calling
//! thread is available from [`sj_last_error_message`]. Panics are caught and
//! reported as [`SjStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use starjunction::assembly::{mu_of_epsilon, ApproxOrder};
use starjunction::harness::{
    run_convergence, run_validation, ConvergenceReport, StudyPlan, Synthetic,
};
use starjunction::model::{Problem, ProblemConfig, Regime};
use starjunction::Error;

/// Status codes. The numeric values match the exit codes of the command-line tool
/// where they overlap.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SjStatus {
    Ok = 0,
    /// Null pointer, bad UTF-8, index out of range.
    InvalidArgument = 1,
    /// The configuration or the requested parameters are not admissible.
    Config = 2,
    /// A solver failed (Newton, linear solver, i/o).
    Solver = 3,
    /// Validation checks failed.
    ValidationFailed = 4,
    /// A panic was caught at the boundary.
    Panic = 5,
}

/// Opaque configured problem.
pub struct SjProblem {
    inner: Problem,
}

/// Opaque convergence report.
pub struct SjReport {
    inner: ConvergenceReport,
}

/// Regime of a problem.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SjRegime {
    A = 0,
    B = 1,
    C = 2,
    Unsupported = 3,
}

/// Options of a convergence study.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SjStudyOptions {
    /// 0 or 1.
    pub order: i32,
    /// Voxels across the node half-side; 0 takes the configured value.
    pub resolution: usize,
    /// Nonzero: use the manufactured reference `U + c eps^p (t/T) / sqrt|Omega|`.
    pub synthetic: i32,
    pub synthetic_c: f64,
    pub synthetic_p: f64,
    /// Nonzero: run the `eps` values on separate threads.
    pub parallel: i32,
}

/// One row of a convergence report. `ok` is 0 when the run for this `eps` failed;
/// the norms are then NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SjErrorRow {
    pub epsilon: f64,
    pub max_l2: f64,
    pub l2h1: f64,
    pub node_grad: f64,
    pub mu: f64,
    pub ok: i32,
}

/// Columns with a fitted order.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SjColumn {
    MaxL2 = 0,
    L2H1 = 1,
    NodeGrad = 2,
    Mu = 3,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn status_of(e: &Error) -> SjStatus {
    if e.is_config_error() {
        SjStatus::Config
    } else {
        SjStatus::Solver
    }
}

/// Runs `f` with panics caught and errors recorded.
fn guard(f: impl FnOnce() -> Result<(), (SjStatus, String)>) -> SjStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SjStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic caught at the C boundary");
            SjStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (SjStatus, String) {
    (status_of(&e), e.to_string())
}

fn arg_err(msg: &str) -> (SjStatus, String) {
    (SjStatus::InvalidArgument, msg.to_string())
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (SjStatus, String)> {
    if p.is_null() {
        return Err(arg_err(&format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| arg_err(&format!("{what} is not valid UTF-8")))
}

unsafe fn write_out<T>(out: *mut T, v: T) -> Result<(), (SjStatus, String)> {
    if out.is_null() {
        return Err(arg_err("output pointer is null"));
    }
    out.write(v);
    Ok(())
}

/// Message of the last failure on this thread, or null. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sj_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn sj_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Builds a problem from a JSON configuration string.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sj_problem_from_json(json: *const c_char, out: *mut *mut SjProblem) -> SjStatus {
    guard(|| {
        let s = c_str(json, "json")?;
        let p = ProblemConfig::from_json_str(s).and_then(|c| c.build()).map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(SjProblem { inner: p })))
    })
}

/// Builds a problem from a JSON configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sj_problem_from_file(path: *const c_char, out: *mut *mut SjProblem) -> SjStatus {
    guard(|| {
        let s = c_str(path, "path")?;
        let p = ProblemConfig::from_file(Path::new(s)).and_then(|c| c.build()).map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(SjProblem { inner: p })))
    })
}

/// The built-in default study problem.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sj_problem_default(out: *mut *mut SjProblem) -> SjStatus {
    guard(|| {
        let p = ProblemConfig::default_study().build().map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(SjProblem { inner: p })))
    })
}

/// Sets the number of time steps of a problem.
///
/// # Safety
/// `problem` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sj_problem_set_time_steps(problem: *mut SjProblem, steps: usize) -> SjStatus {
    guard(|| {
        let p = problem.as_mut().ok_or_else(|| arg_err("problem is null"))?;
        let horizon = p.inner.time.horizon;
        p.inner.time = starjunction::model::TimeGrid::new(horizon, steps).map_err(lib_err)?;
        Ok(())
    })
}

/// Releases a problem; null is ignored.
///
/// # Safety
/// `problem` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sj_problem_free(problem: *mut SjProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Regime of a problem; [`SjRegime::Unsupported`] for a null handle.
///
/// # Safety
/// `problem` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sj_problem_regime(problem: *const SjProblem) -> SjRegime {
    match problem.as_ref().map(|p| p.inner.regime.regime) {
        Some(Regime::A) => SjRegime::A,
        Some(Regime::B) => SjRegime::B,
        Some(Regime::C) => SjRegime::C,
        _ => SjRegime::Unsupported,
    }
}

/// Rate `mu(eps)` of the problem's regime with its configured cutoff exponent.
///
/// # Safety
/// `problem` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sj_mu(problem: *const SjProblem, epsilon: f64, out: *mut f64) -> SjStatus {
    guard(|| {
        let p = problem.as_ref().ok_or_else(|| arg_err("problem is null"))?;
        let mu = mu_of_epsilon(&p.inner.regime, p.inner.asymptotics.a, epsilon).map_err(lib_err)?;
        write_out(out, mu)
    })
}

/// Default study options: first order, configured resolution, real reference runs
/// in parallel.
#[no_mangle]
pub extern "C" fn sj_study_options_default() -> SjStudyOptions {
    SjStudyOptions {
        order: 1,
        resolution: 0,
        synthetic: 0,
        synthetic_c: 0.0,
        synthetic_p: 0.0,
        parallel: 1,
    }
}

/// Runs a convergence study over `n` strictly decreasing values of `eps`. When
/// `output_dir` is non-null the report files are written there.
///
/// # Safety
/// `problem` must be a live handle, `eps` must point to `n` values, `output_dir`
/// must be null or NUL-terminated and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sj_convergence_run(
    problem: *const SjProblem,
    eps: *const f64,
    n: usize,
    options: *const SjStudyOptions,
    output_dir: *const c_char,
    out: *mut *mut SjReport,
) -> SjStatus {
    guard(|| {
        let p = problem.as_ref().ok_or_else(|| arg_err("problem is null"))?;
        if eps.is_null() && n > 0 {
            return Err(arg_err("eps is null"));
        }
        let eps = if n == 0 { Vec::new() } else { std::slice::from_raw_parts(eps, n).to_vec() };
        let opts = options.as_ref().copied().unwrap_or_else(|| sj_study_options_default());
        let order = match opts.order {
            0 => ApproxOrder::Zeroth,
            1 => ApproxOrder::First,
            o => return Err((SjStatus::Config, format!("order must be 0 or 1, got {o}"))),
        };
        let res = if opts.resolution == 0 {
            p.inner.discretization.junction_resolution
        } else {
            opts.resolution
        };
        let mut plan = StudyPlan::new(eps, order, res);
        plan.parallel = opts.parallel != 0;
        if opts.synthetic != 0 {
            plan.synthetic = Some(Synthetic { c: opts.synthetic_c, p: opts.synthetic_p });
        }
        let dir = if output_dir.is_null() { None } else { Some(c_str(output_dir, "output_dir")?) };
        let rep = run_convergence(&p.inner, &plan, dir.map(Path::new)).map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(SjReport { inner: rep })))
    })
}

/// Number of rows (one per `eps`, failed runs included); 0 for null.
///
/// # Safety
/// `report` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn sj_report_rows(report: *const SjReport) -> usize {
    report.as_ref().map_or(0, |r| r.inner.rows.len())
}

/// Row `i` of the requested approximation's errors.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sj_report_row(report: *const SjReport, i: usize, out: *mut SjErrorRow) -> SjStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| arg_err("report is null"))?;
        let row = r.inner.rows.get(i).ok_or_else(|| arg_err("row index out of range"))?;
        let v = match row.approx {
            Some(e) => SjErrorRow {
                epsilon: row.epsilon,
                max_l2: e.max_l2,
                l2h1: e.l2h1,
                node_grad: e.node_grad,
                mu: e.mu,
                ok: 1,
            },
            None => SjErrorRow {
                epsilon: row.epsilon,
                max_l2: f64::NAN,
                l2h1: f64::NAN,
                node_grad: f64::NAN,
                mu: f64::NAN,
                ok: 0,
            },
        };
        write_out(out, v)
    })
}

/// Fitted log-log order of a column over the successful rows.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sj_report_order(report: *const SjReport, column: SjColumn, out: *mut f64) -> SjStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| arg_err("report is null"))?;
        let f = &r.inner.fits;
        let fit = match column {
            SjColumn::MaxL2 => f.max_l2,
            SjColumn::L2H1 => f.l2h1,
            SjColumn::NodeGrad => f.node_grad,
            SjColumn::Mu => f.mu,
        };
        let fit = fit.ok_or_else(|| (SjStatus::Solver, "no order could be fitted for this column".to_string()))?;
        write_out(out, fit.order)
    })
}

/// The full report as a JSON string; release it with [`sj_string_free`].
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sj_report_json(report: *const SjReport, out: *mut *mut c_char) -> SjStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| arg_err("report is null"))?;
        let s = serde_json::to_string(&r.inner).map_err(|e| lib_err(e.into()))?;
        write_out(out, CString::new(s).map_err(|_| arg_err("interior NUL"))?.into_raw())
    })
}

/// Releases a report; null is ignored.
///
/// # Safety
/// `report` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sj_report_free(report: *mut SjReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Runs the validation checks. Writes the JSON checklist to `json_out` when it is
/// non-null and returns [`SjStatus::ValidationFailed`] if any check failed.
///
/// # Safety
/// `problem` must be a live handle; `json_out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn sj_validate(problem: *const SjProblem, seed: u64, json_out: *mut *mut c_char) -> SjStatus {
    let mut failed = Vec::new();
    let status = guard(|| {
        let p = problem.as_ref().ok_or_else(|| arg_err("problem is null"))?;
        let rep = run_validation(&p.inner, seed);
        if !json_out.is_null() {
            let s = serde_json::to_string(&rep).map_err(|e| lib_err(e.into()))?;
            json_out.write(CString::new(s).map_err(|_| arg_err("interior NUL"))?.into_raw());
        }
        failed = rep.failures().iter().map(|c| c.name.clone()).collect();
        Ok(())
    });
    if status == SjStatus::Ok && !failed.is_empty() {
        set_error(format!("failed checks: {}", failed.join(", ")));
        return SjStatus::ValidationFailed;
    }
    status
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sj_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
