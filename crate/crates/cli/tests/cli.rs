use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sylvester")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn approx(v: &Value, want: f64, tol: f64) -> bool {
    v.as_f64().is_some_and(|x| (x - want).abs() <= tol)
}

#[test]
fn analyze_chebyshev() {
    let v = json(&["analyze", "cheb"]);
    assert!(approx(&v["a"], 0.92129, 1e-5));
    assert_eq!(v["period"], 30);
    assert_eq!(v["n"], 6);
    assert_eq!(v["cancellation_sum"], "0");
    assert_eq!(v["base_bounds"]["b_factor"], "6/5");
}

#[test]
fn analyze_accepts_every_scheme_form() {
    for form in ["nu4", "[1;2,3,6]", "1:1,2:-1,3:-1,6:-1"] {
        let v = json(&["analyze", form]);
        assert_eq!(v["explicit"], "1:1,2:-1,3:-1,6:-1", "{form}");
        assert_eq!(v["m"], 5);
    }
}

#[test]
fn non_cancelling_scheme_is_an_error() {
    let out = run(&["analyze", "1:1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not cancel"));
    assert!(out.stdout.is_empty());
}

#[test]
fn unknown_scheme_and_bad_arguments() {
    assert!(!run(&["analyze", "nu42"]).status.success());
    assert!(!run(&["select", "nu4", "--rho", "1.5", "--side", "middle"]).status.success());
    assert!(!run(&["select", "nu4", "--rho", "0.9", "--side", "lower"]).status.success());
    assert!(!run(&["select", "nu4", "--rho", "1.5", "--side", "lower", "--exclude", "7"]).status.success());
    assert!(!run(&["frobnicate"]).status.success());
}

#[test]
fn iterate_nu4_exact_fixed_point() {
    let v = json(&["iterate", "nu4", "--rho", "1.5"]);
    assert_eq!(v["alpha"], "4242/5391");
    assert_eq!(v["beta"], "6380/5391");
    assert!(approx(&v["a"], 0.7958, 1e-4));
    assert!(approx(&v["b"], 1.1969, 1e-4));
    assert_eq!(v["converges"], true);
    assert_eq!(v["recurrence"]["m11"], "1/6");
    assert!(v.get("trace").is_none());
}

#[test]
fn iterate_trace_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let v = json(&["iterate", "nu4", "--rho", "1.5", "--steps", "30", "--csv", path.to_str().unwrap()]);
    let trace = v["trace"].as_array().unwrap();
    assert_eq!(trace.len(), 31);
    let last = &trace[30];
    assert!(approx(&last["a"], 0.795841, 1e-6) && approx(&last["b"], 1.196950, 1e-6));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("i,a_i,b_i\n0,"));
    assert_eq!(text.lines().count(), 32);
}

#[test]
fn iterate_with_omitted_pairs_and_hybrid() {
    let v = json(&["iterate", "nu6", "--rho", "1.1", "--exclude", "440,493", "--exclude", "281,310"]);
    assert!(approx(&v["a"], 0.941854, 1e-4) && approx(&v["b"], 1.056726, 1e-4));
    assert_eq!(v["upper"]["excluded"], serde_json::json!([[440, 493]]));

    let v = json(&["iterate", "nu7", "--rho", "1.1", "--hybrid-lower", "nu6", "--exclude", "440,493", "--exclude", "281,310"]);
    assert_eq!(v["hybrid_lower"]["scheme"], "nu6");
    assert!(v["alpha"].is_null());
    assert!(approx(&v["a"], 0.946197, 5e-4) && approx(&v["b"], 1.055185, 5e-4));

    let v = json(&["iterate", "nu7", "--rho", "1.1", "--hybrid-lower", "nu7", "--hybrid-max-index", "616"]);
    assert_eq!(v["lower"]["truncated_at"], 616);
    assert!(approx(&v["b"], 1.054239, 5e-3));
}

#[test]
fn select_with_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("select.csv");
    let v = json(&["select", "cheb", "--rho", "1.2", "--side", "lower", "--csv", path.to_str().unwrap()]);
    assert_eq!(v["leading"], 6);
    assert_eq!(v["pairs"], serde_json::json!([[7, 10]]));
    assert_eq!(v["term_count"], 4);
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("position,sign,status"));
    assert_eq!(lines.next(), Some("1,1,leading"));
    assert_eq!(lines.next(), Some("6,-1,leading"));
    assert_eq!(lines.next(), Some("7,1,kept"));
    for line in lines {
        let status = line.rsplit(',').next().unwrap();
        assert!(["leading", "kept", "dropped", "standalone"].contains(&status), "{line}");
    }
}

#[test]
fn eprofile_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.csv");
    let v = json(&["eprofile", "nu4", "--csv", path.to_str().unwrap()]);
    assert_eq!(v["period"], 6);
    assert_eq!(v["metrics"]["n"], 6);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "x,E\n1,1\n2,1\n3,1\n4,1\n5,2\n6,0\n");
}

#[test]
fn base_bounds_nu6() {
    let v = json(&["base-bounds", "nu6"]);
    assert_eq!(v["a_prime_factor"], "107/117");
    assert_eq!(v["b_factor"], "10/9");
    assert_eq!((v["n"].as_u64(), v["m"].as_u64()), (Some(10), Some(13)));
}

#[test]
fn sweep_rows_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let v = json(&["sweep", "cheb", "--rho-min", "1.1", "--rho-max", "1.3", "--step", "0.05", "--csv", path.to_str().unwrap()]);
    assert_eq!(v["rows"].as_array().unwrap().len(), 5);
    let opt = &v["optimum"];
    assert!(opt["residual"].as_f64().unwrap() <= 0.05);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("rho,a,b,ratio,lambda1,lambda2,n_lower,n_upper,converges\n"));
    assert_eq!(text.lines().count(), 6);
    assert!(!run(&["sweep", "cheb", "--rho-min", "0.9"]).status.success());
}

#[test]
fn verify_reports_are_json_lines() {
    let out = run(&["verify", "v-identities", "--limit", "2000"]);
    assert!(out.status.success());
    let lines: Vec<Value> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 9);
    assert!(lines.iter().all(|r| r["passed"] == true));

    let out = run(&["verify", "final-bounds", "--a", "1.1", "--b", "1.2", "--limit", "20000"]);
    assert!(!out.status.success());
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["passed"], false);
    assert!(r["witness_x"].as_u64().is_some());
}

#[test]
fn list_schemes_flags_nu4() {
    let v = json(&["list-schemes"]);
    assert_eq!(v.as_object().unwrap().len(), 9);
    assert!(v["nu4"]["caveat"].is_string());
    assert!(v["cheb"].get("caveat").is_none());
    assert_eq!(v["nu7"]["bracket"], "[1,6,10,210,231,1155;2,3,5,7,11,105]");
}
