use std::path::PathBuf;
use std::process::Command;
use wmtr_core::events::Trace;

fn example(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples").join(name).display().to_string()
}

fn wmtr(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_wmtr")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

#[test]
fn check_exit_codes() {
    let (c, s, i) = (example("fig5_spinlock.wm"), example("spinlock_spec.wm"), example("spinlock_impl.wm"));
    let (code, out, _) = wmtr(&["check", "--model", "tso", "--client", &c, "--spec", &s, "--impl", &i]);
    assert_eq!(code, 1);
    assert!(out.starts_with("status: refuted"));
    let (code, out, _) = wmtr(&["check", "--model", "sc", "--client", &c, "--spec", &s, "--impl", &i]);
    assert_eq!(code, 0);
    assert!(out.starts_with("status: holds-within-bound"));
}

#[test]
fn errors_exit_2() {
    let (s, i) = (example("spinlock_spec.wm"), example("spinlock_impl.wm"));
    let (code, _, err) = wmtr(&["check", "--model", "tso", "--client", "missing.wm", "--spec", &s, "--impl", &i]);
    assert_eq!(code, 2);
    assert!(err.contains("file not found"));
    let (code, _, err) = wmtr(&["check", "--model", "arm", "--client", &s]);
    assert_eq!(code, 2);
    assert!(err.contains("unknown model"));
    let (code, _, _) = wmtr(&["frobnicate"]);
    assert_eq!(code, 2);
    // an object given where a client is expected
    let (code, _, err) = wmtr(&["check", "--client", &s, "--spec", &s, "--impl", &i]);
    assert_eq!(code, 2);
    assert!(err.contains("expected a client program"));
    let (code, _, err) = wmtr(&["check", "--client", &example("fig4_lock.wm"), "--impl", &i]);
    assert_eq!(code, 2);
    assert!(err.contains("--spec"));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.wm");
    std::fs::write(&bad, "thread T1 { x := ; }").unwrap();
    let (code, _, err) = wmtr(&["explore", "--client", bad.to_str().unwrap(), "--impl", &i]);
    assert_eq!(code, 2);
    assert!(err.contains("syntax error"));
    let (code, _, _) = wmtr(&["explore", "--client", &example("fig4_lock.wm"), "--impl", &i, "--unroll", "0"]);
    assert_eq!(code, 2);
}

#[test]
fn explore_is_identical_across_worker_counts() {
    let (c, i) = (example("fig5_spinlock.wm"), example("spinlock_impl.wm"));
    let base = ["explore", "--model", "tso", "--client", &c, "--impl", &i, "--format", "records"];
    let (code, one, _) = wmtr(&[&base[..], &["--workers", "1"]].concat());
    assert_eq!(code, 0);
    let (_, four, _) = wmtr(&[&base[..], &["--workers", "4"]].concat());
    assert_eq!(one, four);
    let env = Command::new(env!("CARGO_BIN_EXE_wmtr")).args(base).env("WMTR_WORKERS", "3").output().unwrap();
    assert_eq!(String::from_utf8(env.stdout).unwrap(), one);
    assert!(one.starts_with("{\"len\":0,\"trace\":0}\n"));
}

#[test]
fn dot_of_fig2() {
    let (c, i) = (example("fig2_client.wm"), example("abc_impl.wm"));
    let (code, tso, _) = wmtr(&["dot", "--model", "tso", "--client", &c, "--impl", &i]);
    assert_eq!(code, 0);
    assert!(tso.starts_with("digraph order {"));
    let node = |label: &str| {
        let line = tso.lines().find(|l| l.contains(&format!("[label=\"{label}\"]"))).unwrap();
        line.trim().split(' ').next().unwrap().to_string()
    };
    let chain = ["obs_A", "obs_{x:=rA}", "obs_{z:=1}", "obs_B"].map(node);
    for w in chain.windows(2) {
        assert!(tso.contains(&format!("{} -> {};", w[0], w[1])), "{tso}");
    }
    let (_, relaxed, _) = wmtr(&["dot", "--model", "relaxed", "--client", &c, "--impl", &i]);
    let obs: Vec<String> = relaxed
        .lines()
        .filter(|l| l.contains("label=\"obs_A\"") || l.contains("label=\"obs_B\"") || l.contains("label=\"obs_C\""))
        .map(|l| l.trim().split(' ').next().unwrap().to_string())
        .collect();
    assert_eq!(obs.len(), 3);
    for a in &obs {
        for b in &obs {
            assert!(!relaxed.contains(&format!("{a} -> {b};")));
        }
    }
}

#[test]
fn records_round_trip_through_dot_and_out() {
    let (c, s, i) = (example("fig6_increment.wm"), example("spinlock_spec.wm"), example("spinlock_impl.wm"));
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let (code, out, _) = wmtr(&[
        "check", "--model", "relaxed", "--client", &c, "--spec", &s, "--impl", &i, "--format", "records", "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!((code, out.as_str()), (1, ""));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["status"], "refuted");
    let lines: String = v["trace"].as_array().unwrap().iter().map(|e| format!("{e}\n")).collect();
    let t = Trace::from_records(&lines).unwrap();
    assert!(t.check_wellformed().is_ok());
    let path = dir.path().join("cx.jsonl");
    std::fs::write(&path, &lines).unwrap();
    let (code, dot, _) = wmtr(&["dot", "--trace", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(dot.matches(" -> ").count(), t.len() - 1);
}

#[test]
fn refute_reports_first_refuting_client() {
    let (s, i) = (example("spinlock_spec.wm"), example("spinlock_impl.wm"));
    let (f4, f5) = (example("fig4_lock.wm"), example("fig5_spinlock.wm"));
    let (code, out, _) = wmtr(&["refute", "--model", "tso", "--client", &f4, "--client", &f5, "--spec", &s, "--impl", &i]);
    assert_eq!(code, 1);
    assert!(out.contains(&format!("refuted by client {f5}")));
    let (s, i) = (example("spinlock_spec_notry.wm"), example("spinlock_impl_notry.wm"));
    let (f5, f6) = (example("fig5_notry.wm"), example("fig6_increment.wm"));
    let (code, out, _) =
        wmtr(&["refute", "--model", "tso", "--client", &f4, "--client", &f5, "--client", &f6, "--spec", &s, "--impl", &i]);
    assert_eq!(code, 0);
    assert!(out.contains("no refutation found within bounds"));
    assert!(!out.contains("holds\n"));
}

#[test]
fn axioms_report() {
    let (c, i) = (example("fig4_lock.wm"), example("spinlock_impl.wm"));
    let (code, out, _) = wmtr(&["axioms", "--model", "sc", "--client", &c, "--impl", &i]);
    assert_eq!(code, 0);
    assert!(out.contains("inv/res before: holds"));
    assert!(out.contains("object event order lemma: holds"));
}

#[test]
fn help_exits_0() {
    let (code, out, _) = wmtr(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("check"));
}
