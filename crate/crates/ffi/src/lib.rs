//! C ABI over the refinement checker.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `_free` function. Strings returned by the library are released
//! with [`wmtr_string_free`]. Every fallible call returns a [`WmtrCode`]; the
//! message of the most recent failure on the calling thread is available
//! from [`wmtr_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use wmtr_core::memmodel::{explore, ExploreConfig, ExploreError, ModelId};
use wmtr_core::program::{parse_client, parse_object, ClientProgram, ObjectDef, ValueDomain};
use wmtr_core::refine::{check_wmtr, RefineError, Status, Verdict};

/// Result codes. Non-negative values below `WMTR_ERR_NULL` are verdicts.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WmtrCode {
    WmtrOk = 0,
    WmtrRefuted = 1,
    WmtrErrNull = 2,
    WmtrErrUtf8 = 3,
    WmtrErrParse = 4,
    WmtrErrInterface = 5,
    WmtrErrConfig = 6,
    WmtrErrProgram = 7,
    WmtrErrPanic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WmtrModel {
    WmtrSc = 0,
    WmtrTso = 1,
    WmtrRelaxed = 2,
}

/// Exploration bounds. Obtain defaults from [`wmtr_config_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct WmtrConfig {
    /// One of the `WmtrModel` values.
    pub model: u32,
    pub unroll: u32,
    pub buffer: u32,
    /// Largest value of the domain 0..values.
    pub values: i64,
    pub workers: u32,
}

/// A parsed client program.
pub struct WmtrClient(ClientProgram);

/// A parsed object, specification or implementation.
pub struct WmtrObject(ObjectDef);

/// The outcome of a refinement check.
pub struct WmtrVerdict(Verdict);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(code: WmtrCode, msg: impl Into<String>) -> WmtrCode {
    set_error(msg);
    code
}

fn guard(f: impl FnOnce() -> WmtrCode) -> WmtrCode {
    catch_unwind(AssertUnwindSafe(f))
        .unwrap_or_else(|_| fail(WmtrCode::WmtrErrPanic, "internal panic"))
}

unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, WmtrCode> {
    if s.is_null() {
        return Err(fail(WmtrCode::WmtrErrNull, "null string argument"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(WmtrCode::WmtrErrUtf8, "argument is not valid UTF-8"))
}

fn to_c(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

unsafe fn config_of(c: *const WmtrConfig) -> Result<ExploreConfig, WmtrCode> {
    let c = c.as_ref().copied().unwrap_or_else(|| wmtr_config_default());
    let model = match c.model {
        m if m == WmtrModel::WmtrSc as u32 => ModelId::Sc,
        m if m == WmtrModel::WmtrTso as u32 => ModelId::Tso,
        m if m == WmtrModel::WmtrRelaxed as u32 => ModelId::Relaxed,
        m => return Err(fail(WmtrCode::WmtrErrConfig, format!("unknown model {m}"))),
    };
    Ok(ExploreConfig {
        model,
        unroll: c.unroll,
        buffer: c.buffer as usize,
        domain: ValueDomain::new(c.values),
        coremap: None,
        workers: c.workers.max(1) as usize,
    })
}

fn explore_code(e: &ExploreError) -> WmtrCode {
    match e {
        ExploreError::Config(_) => WmtrCode::WmtrErrConfig,
        _ => WmtrCode::WmtrErrProgram,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wmtr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or NULL. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn wmtr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Default bounds: SC, unroll 2, buffer 4, values 0..3, one worker.
#[no_mangle]
pub extern "C" fn wmtr_config_default() -> WmtrConfig {
    let d = ExploreConfig::default();
    WmtrConfig {
        model: WmtrModel::WmtrSc as u32,
        unroll: d.unroll,
        buffer: d.buffer as u32,
        values: d.domain.max,
        workers: 1,
    }
}

/// Parses a client program from NUL-terminated source text.
///
/// # Safety
/// `src` must be NULL or a valid C string; `out` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn wmtr_client_parse(
    src: *const c_char,
    out: *mut *mut WmtrClient,
) -> WmtrCode {
    guard(|| {
        if out.is_null() {
            return fail(WmtrCode::WmtrErrNull, "null output pointer");
        }
        let s = match text(src) {
            Ok(s) => s,
            Err(c) => return c,
        };
        match parse_client(s) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(WmtrClient(p)));
                WmtrCode::WmtrOk
            }
            Err(e) => fail(WmtrCode::WmtrErrParse, e.to_string()),
        }
    })
}

/// Parses an object (specification or implementation).
///
/// # Safety
/// As for [`wmtr_client_parse`].
#[no_mangle]
pub unsafe extern "C" fn wmtr_object_parse(
    src: *const c_char,
    out: *mut *mut WmtrObject,
) -> WmtrCode {
    guard(|| {
        if out.is_null() {
            return fail(WmtrCode::WmtrErrNull, "null output pointer");
        }
        let s = match text(src) {
            Ok(s) => s,
            Err(c) => return c,
        };
        match parse_object(s) {
            Ok(o) => {
                *out = Box::into_raw(Box::new(WmtrObject(o)));
                WmtrCode::WmtrOk
            }
            Err(e) => fail(WmtrCode::WmtrErrParse, e.to_string()),
        }
    })
}

/// Counts the traces of `client` running with `object`.
///
/// # Safety
/// Handles must be NULL or live handles from this library; `config` may be
/// NULL for defaults; `out` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn wmtr_explore_count(
    client: *const WmtrClient,
    object: *const WmtrObject,
    config: *const WmtrConfig,
    out: *mut usize,
) -> WmtrCode {
    guard(|| {
        if client.is_null() || object.is_null() || out.is_null() {
            return fail(WmtrCode::WmtrErrNull, "null argument");
        }
        let cfg = match config_of(config) {
            Ok(c) => c,
            Err(code) => return code,
        };
        match explore(&(*client).0, &(*object).0, &cfg) {
            Ok(set) => {
                *out = set.len();
                WmtrCode::WmtrOk
            }
            Err(e) => fail(explore_code(&e), e.to_string()),
        }
    })
}

/// Checks whether `imp` refines `spec` for `client` within the bounds. On
/// success `*out` receives a verdict handle and the result is `WmtrOk` or
/// `WmtrRefuted`.
///
/// # Safety
/// As for [`wmtr_explore_count`].
#[no_mangle]
pub unsafe extern "C" fn wmtr_check(
    client: *const WmtrClient,
    spec: *const WmtrObject,
    imp: *const WmtrObject,
    config: *const WmtrConfig,
    out: *mut *mut WmtrVerdict,
) -> WmtrCode {
    guard(|| {
        if client.is_null() || spec.is_null() || imp.is_null() || out.is_null() {
            return fail(WmtrCode::WmtrErrNull, "null argument");
        }
        let cfg = match config_of(config) {
            Ok(c) => c,
            Err(code) => return code,
        };
        match check_wmtr(&(*client).0, &(*spec).0, &(*imp).0, &cfg) {
            Ok(v) => {
                let code = if v.status == Status::Refuted {
                    WmtrCode::WmtrRefuted
                } else {
                    WmtrCode::WmtrOk
                };
                *out = Box::into_raw(Box::new(WmtrVerdict(v)));
                code
            }
            Err(RefineError::Interface(m)) => fail(WmtrCode::WmtrErrInterface, m),
            Err(RefineError::Explore(e)) => fail(explore_code(&e), e.to_string()),
        }
    })
}

/// `WmtrRefuted` or `WmtrOk` for a verdict, `WmtrErrNull` for NULL.
///
/// # Safety
/// `v` must be NULL or a live verdict handle.
#[no_mangle]
pub unsafe extern "C" fn wmtr_verdict_status(v: *const WmtrVerdict) -> WmtrCode {
    match v.as_ref() {
        None => WmtrCode::WmtrErrNull,
        Some(v) if v.0.status == Status::Refuted => WmtrCode::WmtrRefuted,
        Some(_) => WmtrCode::WmtrOk,
    }
}

/// Number of events in the counterexample, 0 if there is none.
///
/// # Safety
/// `v` must be NULL or a live verdict handle.
#[no_mangle]
pub unsafe extern "C" fn wmtr_verdict_counterexample_len(v: *const WmtrVerdict) -> usize {
    v.as_ref()
        .and_then(|v| v.0.counterexample.as_ref())
        .map_or(0, |c| c.trace.len())
}

/// The verdict's report, as text (`json` = 0) or JSON (`json` != 0). Free
/// with [`wmtr_string_free`].
///
/// # Safety
/// `v` must be NULL or a live verdict handle.
#[no_mangle]
pub unsafe extern "C" fn wmtr_verdict_report(v: *const WmtrVerdict, json: i32) -> *mut c_char {
    match v.as_ref() {
        None => ptr::null_mut(),
        Some(v) if json != 0 => to_c(v.0.to_json().to_string()),
        Some(v) => to_c(v.0.to_string()),
    }
}

/// The refuting observable behaviour, e.g. `⟨(T1, y, 1), (T2, y, 1)⟩`, or NULL
/// if the verdict holds. Free with [`wmtr_string_free`].
///
/// # Safety
/// `v` must be NULL or a live verdict handle.
#[no_mangle]
pub unsafe extern "C" fn wmtr_verdict_observable(v: *const WmtrVerdict) -> *mut c_char {
    v.as_ref()
        .and_then(|v| v.0.counterexample.as_ref())
        .map_or(ptr::null_mut(), |c| to_c(c.observable.to_string()))
}

/// # Safety
/// `p` must be NULL or a handle from [`wmtr_client_parse`], freed once.
#[no_mangle]
pub unsafe extern "C" fn wmtr_client_free(p: *mut WmtrClient) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `o` must be NULL or a handle from [`wmtr_object_parse`], freed once.
#[no_mangle]
pub unsafe extern "C" fn wmtr_object_free(o: *mut WmtrObject) {
    if !o.is_null() {
        drop(Box::from_raw(o));
    }
}

/// # Safety
/// `v` must be NULL or a handle from [`wmtr_check`], freed once.
#[no_mangle]
pub unsafe extern "C" fn wmtr_verdict_free(v: *mut WmtrVerdict) {
    if !v.is_null() {
        drop(Box::from_raw(v));
    }
}

/// # Safety
/// `s` must be NULL or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn wmtr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
