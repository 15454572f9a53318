use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::ptr;
use wmtr_ffi::*;

fn example(name: &str) -> CString {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/examples").join(name);
    CString::new(std::fs::read_to_string(path).unwrap()).unwrap()
}

fn client(name: &str) -> *mut WmtrClient {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { wmtr_client_parse(example(name).as_ptr(), &mut p) }, WmtrCode::WmtrOk);
    p
}

fn object(name: &str) -> *mut WmtrObject {
    let mut o = ptr::null_mut();
    assert_eq!(unsafe { wmtr_object_parse(example(name).as_ptr(), &mut o) }, WmtrCode::WmtrOk);
    o
}

fn take(s: *mut std::ffi::c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { wmtr_string_free(s) };
    out
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(wmtr_last_error()) }.to_str().unwrap().to_string()
}

#[test]
fn relaxed_refutation_through_the_abi() {
    let (p, s, i) = (client("fig6_increment.wm"), object("spinlock_spec.wm"), object("spinlock_impl.wm"));
    let mut cfg = wmtr_config_default();
    cfg.model = WmtrModel::WmtrRelaxed as u32;
    let mut v = ptr::null_mut();
    assert_eq!(unsafe { wmtr_check(p, s, i, &cfg, &mut v) }, WmtrCode::WmtrRefuted);
    unsafe {
        assert_eq!(wmtr_verdict_status(v), WmtrCode::WmtrRefuted);
        assert!(wmtr_verdict_counterexample_len(v) > 0);
        assert_eq!(take(wmtr_verdict_observable(v)), "⟨(T1, y, 1), (T2, y, 1)⟩");
        assert!(take(wmtr_verdict_report(v, 0)).starts_with("status: refuted"));
        let json: serde_json::Value = serde_json::from_str(&take(wmtr_verdict_report(v, 1))).unwrap();
        assert_eq!(json["model"], "relaxed");
        wmtr_verdict_free(v);
    }
    cfg.model = WmtrModel::WmtrSc as u32;
    let mut v = ptr::null_mut();
    assert_eq!(unsafe { wmtr_check(p, s, i, &cfg, &mut v) }, WmtrCode::WmtrOk);
    unsafe {
        assert!(wmtr_verdict_observable(v).is_null());
        assert_eq!(wmtr_verdict_counterexample_len(v), 0);
        wmtr_verdict_free(v);
        wmtr_client_free(p);
        wmtr_object_free(s);
        wmtr_object_free(i);
    }
}

#[test]
fn error_codes() {
    let mut p = ptr::null_mut();
    let bad = CString::new("thread T1 { x := ; }").unwrap();
    assert_eq!(unsafe { wmtr_client_parse(bad.as_ptr(), &mut p) }, WmtrCode::WmtrErrParse);
    assert!(last_error().contains("syntax error"));
    assert!(p.is_null());
    assert_eq!(unsafe { wmtr_client_parse(ptr::null(), &mut p) }, WmtrCode::WmtrErrNull);
    let mut o = ptr::null_mut();
    assert_eq!(unsafe { wmtr_object_parse(example("fig4_lock.wm").as_ptr(), &mut o) }, WmtrCode::WmtrErrParse);
    assert!(last_error().contains("expected an object"));

    let (c, s, i) = (client("fig4_lock.wm"), object("spinlock_spec.wm"), object("spinlock_impl_notry.wm"));
    let mut v = ptr::null_mut();
    assert_eq!(unsafe { wmtr_check(c, s, i, ptr::null(), &mut v) }, WmtrCode::WmtrErrInterface);
    assert!(v.is_null());
    let mut cfg = wmtr_config_default();
    cfg.model = 9;
    let mut n = 0usize;
    assert_eq!(unsafe { wmtr_explore_count(c, s, &cfg, &mut n) }, WmtrCode::WmtrErrConfig);
    cfg = wmtr_config_default();
    cfg.unroll = 0;
    assert_eq!(unsafe { wmtr_explore_count(c, s, &cfg, &mut n) }, WmtrCode::WmtrErrConfig);
    assert!(last_error().contains("unroll"));
    assert_eq!(unsafe { wmtr_explore_count(c, s, ptr::null(), &mut n) }, WmtrCode::WmtrOk);
    assert!(n > 1);
    assert_eq!(unsafe { wmtr_verdict_status(ptr::null()) }, WmtrCode::WmtrErrNull);
    unsafe {
        wmtr_client_free(c);
        wmtr_object_free(s);
        wmtr_object_free(i);
        wmtr_client_free(ptr::null_mut());
        wmtr_string_free(ptr::null_mut());
    }
}

#[test]
fn version_and_header() {
    let v = unsafe { CStr::from_ptr(wmtr_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    let header = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/wmtr.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for decl in ["typedef struct WmtrVerdict WmtrVerdict;", "WMTR_REFUTED = 1", "enum WmtrCode wmtr_check("] {
        assert!(text.contains(decl), "{decl}");
    }
    if let Ok(out) = std::process::Command::new("cc").args(["-fsyntax-only", "-x", "c"]).arg(&header).output() {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn c_program_links_against_the_static_library() {
    let deps = std::env::current_exe().unwrap().parent().unwrap().to_path_buf();
    let lib = deps.parent().unwrap().join("libwmtr_ffi.a");
    if !lib.exists() {
        panic!("static library not built at {}", lib.display());
    }
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let tmp = tempfile::tempdir().unwrap();
    let exe = tmp.path().join("smoke");
    let status = std::process::Command::new("cc")
        .arg(dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("a C compiler");
    assert!(status.success());
    let out = std::process::Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "⟨(T1, y, 1), (T2, y, 1)⟩\n");
}
