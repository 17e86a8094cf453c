use std::process::{Command, Output};

use serde_json::Value;

fn repgame(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_repgame"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn stderr_json(out: &Output) -> Value {
    assert!(!out.status.success());
    serde_json::from_slice(&out.stderr).expect("json error record on stderr")
}

#[test]
fn catalog_list() {
    let out = repgame(&["catalog", "--list"]);
    assert!(out.status.success());
    let names: Vec<String> = String::from_utf8(out.stdout).unwrap().lines().map(String::from).collect();
    assert_eq!(names, ["gamma", "gamma_r", "state_blind", "one_informed"]);
}

#[test]
fn catalog_dump_round_trips_through_solve() {
    let out = repgame(&["catalog", "--dump", "gamma"]);
    assert!(out.status.success());
    let dir = std::env::temp_dir().join(format!("repgame-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("gamma.json");
    std::fs::write(&path, &out.stdout).unwrap();
    let a = stdout_json(&repgame(&["solve", "--spec", path.to_str().unwrap(), "--lambda", "1/32"]));
    let b = stdout_json(&repgame(&["solve", "--game", "gamma", "--lambda", "2^-5"]));
    assert_eq!(a["value"], b["value"]);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn solve_gamma_matches_closed_form() {
    let v = stdout_json(&repgame(&["solve", "--game", "gamma", "--lambda", "2^-13", "--max-nodes", "4096"]));
    assert_eq!(v["root"], "1_0");
    assert_eq!(v["lambda"], "2^-13");
    assert_eq!(v["lambda_value"].as_f64().unwrap(), 2f64.powi(-13));
    let closed = repgame::analytics::threshold_value(
        &repgame::analytics::ThresholdGame::new(2f64.powi(-13), 1, 2).unwrap(),
        256,
    )
    .unwrap()
    .value;
    let got = v["value"].as_f64().unwrap();
    assert!((got - closed).abs() <= 1e-6 + v["error_bound"].as_f64().unwrap());
}

#[test]
fn solve_horizon() {
    let v = stdout_json(&repgame(&["solve", "--game", "gamma", "--horizon", "1"]));
    assert_eq!(v["value"].as_f64().unwrap(), 1.0);
    assert_eq!(v["horizon"], 1);
}

#[test]
fn sweep_both_csv() {
    let out = repgame(&[
        "sweep", "--game", "gamma", "--sequence", "lambda_m", "--m-from", "3", "--m-to", "4", "--method", "both",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_reader(&out.stdout[..]);
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["lambda", "value", "a_star", "b_star", "method", "error_bound", "discrepancy"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    let lambdas: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(lambdas, [2f64.powi(-13), 2f64.powi(-17)]);
    for r in &rows {
        let bound: f64 = r[5].parse().unwrap();
        let disc: f64 = r[6].parse().unwrap();
        assert!(disc < 1e-6 + bound);
    }
}

#[test]
fn sweep_closed_form_has_no_discrepancy_column() {
    let out = repgame(&["sweep", "--game", "gamma", "--lambda", "2^-9,0.01"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("lambda,value,a_star,b_star,method,error_bound"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn simulate_is_reproducible() {
    let args = [
        "simulate", "--game", "gamma", "--sigma", "s:4", "--tau", "t:4", "--lambda", "0.01", "--episodes", "2000",
        "--seed", "17",
    ];
    let a = repgame(&args);
    let b = repgame(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    for key in ["mean", "se", "episodes", "horizon", "seed"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["seed"], 17);
}

#[test]
fn reduce_reports_chain() {
    let v = stdout_json(&repgame(&["reduce", "--game", "gamma", "--max-nodes", "20"]));
    assert!(v["nodes"].as_array().unwrap().len() <= 20);
    let err = stderr_json(&repgame(&["reduce", "--game", "gamma", "--max-nodes", "20", "--exact"]));
    assert_eq!(err["error"], "belief");
}

#[test]
fn errors_are_machine_readable() {
    let e = stderr_json(&repgame(&["solve", "--game", "nope", "--lambda", "0.1"]));
    assert_eq!(e["error"], "catalog");
    let e = stderr_json(&repgame(&["solve", "--game", "gamma", "--lambda", "2^3"]));
    assert_eq!(e["error"], "usage");
    let e = stderr_json(&repgame(&["solve", "--game", "gamma", "--lambda", "0.1", "--horizon", "3"]));
    assert_eq!(e["error"], "usage");
    let e = stderr_json(&repgame(&["simulate", "--game", "gamma", "--sigma", "sigma*", "--tau", "t:1", "--lambda", "0.1"]));
    assert_eq!(e["error"], "simulator");
    let out = repgame(&["solve", "--spec", "/nonexistent/game.json", "--lambda", "0.1"]);
    assert_eq!(stderr_json(&out)["error"], "io");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_subset() {
    let out = repgame(&["verify", "--only", "A2,A4"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("A2 PASS"));
    assert!(lines[1].starts_with("A4 PASS"));
    let out = repgame(&["verify", "--only", "A7"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("A7 FAIL"));
}
