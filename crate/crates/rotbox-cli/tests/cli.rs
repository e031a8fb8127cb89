use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn rotbox(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rotbox"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn fixture_path(file: &str) -> String {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.push("../rotbox/fixtures");
    p.push(file);
    p.to_string_lossy().into_owned()
}

#[test]
fn pstar_membership_emits_certificate() {
    let out = rotbox(&["membership", "--poly", &fixture_path("pstar.json"), "--two-j", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["feasible"], true);
    assert!(v["certificate"]["q"].is_array());
}

#[test]
fn out_of_range_box_exits_one() {
    let out = rotbox(&["membership", "--two-j", "1", "--c", "0.5,0.6", "--s", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_eq!(v["feasible"], false);
    assert_eq!(v["infeasibility"]["violated_bound"], "lower");
}

#[test]
fn certify_q32_passes() {
    let out = rotbox(&["certify", "--fixture", "q32"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["passed"], true);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(rotbox(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(
        rotbox(&["optimize", "--two-j", "3", "--direction", "1,2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(rotbox(&["certify", "--fixture", "missing"]).status.code(), Some(2));
    assert_eq!(rotbox(&["membership"]).status.code(), Some(2));
    assert_eq!(rotbox(&["approx", "--two-j", "3"]).status.code(), Some(2));
}

#[test]
fn optimize_reports_value_and_dual_bound() {
    let out = rotbox(&["optimize", "--two-j", "2", "--terms", "c1+s2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    let value = v["value"].as_f64().unwrap();
    let dual = v["dual_bound"].as_f64().unwrap();
    assert!((value - dual).abs() < 1e-6);
}

#[test]
fn boundary_csv_has_header_and_rows() {
    let out = rotbox(&["boundary", "--two-j", "3", "--angles", "6", "--csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "phi,value,x,y,error");
    assert_eq!(lines.len(), 7);
}

#[test]
fn factor_reconstructs_and_rejects_negative() {
    let out = rotbox(&["factor", "--c", "1/2,0,-1/2", "--s", "0,0"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout_json(&out)["reconstruction_error"].as_f64().unwrap() < 1e-9);
    assert_eq!(rotbox(&["factor", "--c", "0.5,0.6", "--s", "0"]).status.code(), Some(1));
}

#[test]
fn seesaw_is_seeded() {
    let args = ["seesaw", "--two-j", "3", "--restarts", "3", "--seed", "5"];
    let a = stdout_json(&rotbox(&args));
    let b = stdout_json(&rotbox(&args));
    assert_eq!(a["value"], b["value"]);
    assert!((a["value"].as_f64().unwrap() - 1.0 / 3f64.sqrt()).abs() < 1e-6);
}

#[test]
fn seesaw_trace_csv() {
    let out = rotbox(&["seesaw", "--two-j", "2", "--restarts", "2", "--trace", "--csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("restart,round,step,objective"));
}

#[test]
fn game_reports_analytic_and_empirical() {
    let out = rotbox(&["game", "--box", "coin", "--trials", "20000", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["analytic"].as_f64().unwrap(), 0.5);
    let e = v["empirical"].as_f64().unwrap();
    let se = v["stderr"].as_f64().unwrap();
    assert!((e - 0.5).abs() < 4.0 * se);
}

#[test]
fn randomness_curve_csv() {
    let out = rotbox(&["randomness-curve", "--two-j", "1", "--points", "3", "--csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("e1,e2_min,e2_max"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn bell_demo_passes() {
    let out = rotbox(&["bell-demo"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["no_signalling"], true);
}

#[test]
fn nagata_reads_tensor_file() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    // T_xx = T_yy = 1: the planar square sum is 2 while the maximum is 1
    let t = serde_json::json!({"parties": 2, "t": [1, 0, 0, 0, 1, 0, 0, 0, 0]});
    write!(f, "{t}").unwrap();
    let out = rotbox(&["nagata", "--tensor", f.path().to_str().unwrap(), "--seed", "1"]);
    let v = stdout_json(&out);
    let violated = v["violated"].as_bool().unwrap();
    assert_eq!(out.status.code(), Some(if violated { 1 } else { 0 }));
    assert!((v["t_max"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn approx_within_bound() {
    let out = rotbox(&["approx", "--two-j", "10", "--n", "10"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["within_bound"], true);
}

#[test]
fn fixtures_listed_and_dumped() {
    let out = rotbox(&["fixtures"]);
    assert_eq!(out.status.code(), Some(0));
    let names: Vec<String> = stdout_json(&out)
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["name"].as_str().unwrap().to_string())
        .collect();
    for n in ["pstar", "q32", "q2", "q52", "q3", "optimal_e_rho", "j1_gallery"] {
        assert!(names.iter().any(|x| x == n), "{n} missing");
    }
    let one = rotbox(&["fixtures", "--name", "q32"]);
    assert_eq!(stdout_json(&one)["two_j"], 3);
}
