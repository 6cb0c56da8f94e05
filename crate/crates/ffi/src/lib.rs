//! C ABI over the debloating toolkit.
//!
//! Objects cross the boundary as opaque handles that the caller owns and
//! releases with the matching `*_free` function. Every fallible call
//! returns a [`LeaderStatus`]; on failure `leader_last_error` describes the
//! problem until the next call on the same thread. Strings returned to the
//! caller are released with [`leader_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use leader::advisor::security::SeverityMap;
use leader::metrics::{evaluate, EvalConfig};
use leader::minic::{parse, print_unit, SourceUnit};
use leader::pipeline::{debloat_program, DebloatConfig, DebloatRun};
use leader::runtime::{parse_suite, TestCase};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeaderStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    SuiteError = 4,
    ConfigError = 5,
    PipelineError = 6,
    MetricsError = 7,
    Panic = 8,
}

/// A parsed MiniC program.
pub struct LeaderProgram {
    unit: SourceUnit,
}

/// A list of test cases.
pub struct LeaderSuite {
    tests: Vec<TestCase>,
}

/// The outcome of one debloating run.
pub struct LeaderRun {
    run: DebloatRun,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

struct Failure(LeaderStatus, String);

/// Clear the error slot, run `f`, and turn errors and panics into codes.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LeaderStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LeaderStatus::Ok,
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            LeaderStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(LeaderStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(LeaderStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn opt_text<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        text(p, what).map(Some)
    }
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(LeaderStatus::NullArgument, format!("{what} is null")))
}

fn out_ptr<T>(out: *mut T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        Err(Failure(LeaderStatus::NullArgument, format!("{what} is null")))
    } else {
        Ok(())
    }
}

fn to_c(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

/// The message for the last failed call on this thread, or null. The
/// pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn leader_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn leader_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse and type-check MiniC source.
///
/// # Safety
/// `source` and `name` must be NUL-terminated strings; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn leader_program_parse(
    source: *const c_char,
    name: *const c_char,
    out: *mut *mut LeaderProgram,
) -> LeaderStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let src = text(source, "source")?;
        let name = opt_text(name, "name")?.unwrap_or("program");
        let unit = parse(src, name).map_err(|d| Failure(LeaderStatus::ParseError, d.to_string()))?;
        *out = Box::into_raw(Box::new(LeaderProgram { unit }));
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a handle from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn leader_program_free(p: *mut LeaderProgram) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of statements, or 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live program handle.
#[no_mangle]
pub unsafe extern "C" fn leader_program_size(p: *const LeaderProgram) -> usize {
    p.as_ref().map_or(0, |p| p.unit.size())
}

/// Canonical source text of the program, or null for a null handle.
///
/// # Safety
/// `p` must be null or a live program handle.
#[no_mangle]
pub unsafe extern "C" fn leader_program_print(p: *const LeaderProgram) -> *mut c_char {
    p.as_ref().map_or(ptr::null_mut(), |p| to_c(print_unit(&p.unit)))
}

/// Parse a suite in JSON Lines form.
///
/// # Safety
/// `jsonl` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn leader_suite_parse(jsonl: *const c_char, out: *mut *mut LeaderSuite) -> LeaderStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let tests = parse_suite(text(jsonl, "jsonl")?).map_err(|e| Failure(LeaderStatus::SuiteError, e.to_string()))?;
        *out = Box::into_raw(Box::new(LeaderSuite { tests }));
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a live suite handle.
#[no_mangle]
pub unsafe extern "C" fn leader_suite_len(s: *const LeaderSuite) -> usize {
    s.as_ref().map_or(0, |s| s.tests.len())
}

/// # Safety
/// `s` must be null or a handle from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn leader_suite_free(s: *mut LeaderSuite) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Debloat `program` against the stamped tests in `t_d`. `doc` may be
/// null. `config_json` may be null for defaults, or a JSON object with any
/// of the pipeline settings (`seed`, `augment`, `max_iterations`, ...).
/// Only the rule-based policy is available through this interface.
///
/// # Safety
/// Handles must be live; strings NUL-terminated or null; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn leader_debloat(
    program: *const LeaderProgram,
    t_d: *const LeaderSuite,
    doc: *const c_char,
    config_json: *const c_char,
    out: *mut *mut LeaderRun,
) -> LeaderStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let p = handle(program, "program")?;
        let s = handle(t_d, "t_d")?;
        let doc = opt_text(doc, "doc")?;
        let config: DebloatConfig = match opt_text(config_json, "config_json")? {
            Some(j) => serde_json::from_str(j).map_err(|e| Failure(LeaderStatus::ConfigError, e.to_string()))?,
            None => DebloatConfig::default(),
        };
        let run = debloat_program(&p.unit, &s.tests, doc, &config, None)
            .map_err(|e| Failure(LeaderStatus::PipelineError, e.to_string()))?;
        *out = Box::into_raw(Box::new(LeaderRun { run }));
        Ok(())
    })
}

/// # Safety
/// `r` must be null or a handle from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn leader_run_free(r: *mut LeaderRun) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// A new program handle holding the debloated program.
///
/// # Safety
/// `r` must be a live run handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn leader_run_debloated(r: *const LeaderRun, out: *mut *mut LeaderProgram) -> LeaderStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let r = handle(r, "run")?;
        *out = Box::into_raw(Box::new(LeaderProgram {
            unit: r.run.debloated.clone(),
        }));
        Ok(())
    })
}

/// The run log as JSON, or null for a null handle.
///
/// # Safety
/// `r` must be null or a live run handle.
#[no_mangle]
pub unsafe extern "C" fn leader_run_log_json(r: *const LeaderRun) -> *mut c_char {
    r.as_ref().map_or(ptr::null_mut(), |r| {
        to_c(serde_json::to_string(&r.run.log).expect("log serializes"))
    })
}

/// 1 if the debloated program passed its whole validation suite, else 0.
///
/// # Safety
/// `r` must be null or a live run handle.
#[no_mangle]
pub unsafe extern "C" fn leader_run_passed(r: *const LeaderRun) -> i32 {
    r.as_ref().map_or(0, |r| i32::from(r.run.log.passes_validation_suite))
}

/// Score `debloated` against `original` on `t_e`; writes the metrics as a
/// JSON string to `out_json`.
///
/// # Safety
/// Handles must be live; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn leader_evaluate(
    original: *const LeaderProgram,
    debloated: *const LeaderProgram,
    t_e: *const LeaderSuite,
    seed: u64,
    out_json: *mut *mut c_char,
) -> LeaderStatus {
    guard(|| {
        out_ptr(out_json, "out_json")?;
        let p = handle(original, "original")?;
        let p2 = handle(debloated, "debloated")?;
        let s = handle(t_e, "t_e")?;
        let config = EvalConfig {
            seed,
            ..EvalConfig::default()
        };
        let report = evaluate(&p.unit, &p2.unit, &s.tests, &config, &SeverityMap::default())
            .map_err(|e| Failure(LeaderStatus::MetricsError, e.to_string()))?;
        *out_json = to_c(serde_json::to_string(&report).expect("report serializes"));
        Ok(())
    })
}
