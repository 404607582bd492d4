//! C ABI over `tdho-core`.
//!
//! Objects are opaque heap handles released with their `_free` function.
//! Every fallible call returns a `TdhoStatus`; on failure the message is
//! kept per thread and read with `tdho_last_error_message`. Strings handed
//! out by the library are released with `tdho_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use tdho::scenario::Scenario;
use tdho::states::WavefunctionField;
use tdho::suite::{self, SuiteKind};
use tdho::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TdhoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    InvalidParameter = 4,
    Domain = 5,
    GridTooSmall = 6,
    Numerical = 7,
    Io = 8,
    Panic = 9,
}

/// A loaded, validated scenario.
pub struct TdhoScenario(Scenario);

/// One eigenstate of a scenario.
pub struct TdhoState {
    field: WavefunctionField,
    model: tdho::models::OscillatorModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(s));
}

fn status_of(e: &Error) -> TdhoStatus {
    match e {
        Error::Config { .. } | Error::Json(_) => TdhoStatus::Config,
        Error::InvalidParameter(_) | Error::Overdamped { .. } | Error::NonPositiveOmega(_) | Error::DegenerateBasis(_) => {
            TdhoStatus::InvalidParameter
        }
        Error::Domain { .. } => TdhoStatus::Domain,
        Error::GridTooSmall { .. } | Error::GridMismatch(_) => TdhoStatus::GridTooSmall,
        Error::Io(_) => TdhoStatus::Io,
        _ => TdhoStatus::Numerical,
    }
}

/// Runs `f`, recording any error or panic.
fn guard(f: impl FnOnce() -> Result<(), (TdhoStatus, String)>) -> TdhoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TdhoStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside tdho");
            TdhoStatus::Panic
        }
    }
}

fn lift(e: Error) -> (TdhoStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (TdhoStatus, String) {
    (TdhoStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (TdhoStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (TdhoStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

/// Library version, static storage; do not free.
#[no_mangle]
pub extern "C" fn tdho_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy of the last error message on this thread, or null if none.
/// Free with `tdho_string_free`.
#[no_mangle]
pub extern "C" fn tdho_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |s| s.clone().into_raw()))
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn tdho_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a scenario from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tdho_scenario_from_json(json: *const c_char, out: *mut *mut TdhoScenario) -> TdhoStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = read_str(json, "json")?;
        let sc = Scenario::from_json(text, None).map_err(lift)?;
        *out = Box::into_raw(Box::new(TdhoScenario(sc)));
        Ok(())
    })
}

/// Loads a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tdho_scenario_load(path: *const c_char, out: *mut *mut TdhoScenario) -> TdhoStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = read_str(path, "path")?;
        let sc = Scenario::load(Path::new(path)).map_err(lift)?;
        *out = Box::into_raw(Box::new(TdhoScenario(sc)));
        Ok(())
    })
}

/// # Safety
/// `sc` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn tdho_scenario_free(sc: *mut TdhoScenario) {
    if !sc.is_null() {
        drop(Box::from_raw(sc));
    }
}

/// Runs the check suite (`fast` non-zero selects the reduced suite). The JSON
/// report goes to `report_json` (free with `tdho_string_free`) and
/// `all_pass` is set to 1 or 0.
///
/// # Safety
/// `sc` must be a live handle; both out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn tdho_verify(
    sc: *const TdhoScenario,
    fast: c_int,
    report_json: *mut *mut c_char,
    all_pass: *mut c_int,
) -> TdhoStatus {
    guard(|| {
        let sc = sc.as_ref().ok_or_else(|| null("scenario"))?;
        if report_json.is_null() || all_pass.is_null() {
            return Err(null("out"));
        }
        let kind = if fast != 0 { SuiteKind::Fast } else { SuiteKind::Full };
        let report = suite::run(&sc.0, kind);
        *all_pass = c_int::from(report.all_pass());
        *report_json = into_c_string(report.to_json());
        Ok(())
    })
}

/// Builds eigenstate `n` of the scenario.
///
/// # Safety
/// `sc` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tdho_state_new(sc: *const TdhoScenario, n: usize, out: *mut *mut TdhoState) -> TdhoStatus {
    guard(|| {
        let sc = sc.as_ref().ok_or_else(|| null("scenario"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let field = sc.0.field(n).map_err(lift)?;
        *out = Box::into_raw(Box::new(TdhoState {
            field,
            model: sc.0.model.clone(),
        }));
        Ok(())
    })
}

/// # Safety
/// `st` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn tdho_state_free(st: *mut TdhoState) {
    if !st.is_null() {
        drop(Box::from_raw(st));
    }
}

/// Evaluates ψ(x_i, t) for `len` points.
///
/// # Safety
/// `xs`, `re` and `im` must each point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tdho_state_eval(
    st: *const TdhoState,
    t: f64,
    xs: *const f64,
    len: usize,
    re: *mut f64,
    im: *mut f64,
) -> TdhoStatus {
    guard(|| {
        let st = st.as_ref().ok_or_else(|| null("state"))?;
        if len == 0 {
            return Ok(());
        }
        if xs.is_null() || re.is_null() || im.is_null() {
            return Err(null("buffer"));
        }
        st.model.check_domain(t).map_err(lift)?;
        let slice = st.field.slice(t).map_err(lift)?;
        let xs = std::slice::from_raw_parts(xs, len);
        let re = std::slice::from_raw_parts_mut(re, len);
        let im = std::slice::from_raw_parts_mut(im, len);
        for ((x, r), i) in xs.iter().zip(re).zip(im) {
            let z = slice.eval(*x);
            *r = z.re;
            *i = z.im;
        }
        Ok(())
    })
}
