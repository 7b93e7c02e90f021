use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_causal-bounds"))
        .args(args)
        .env_remove("CAUSAL_BOUNDS_SEED")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn write(dir: &Path, name: &str, contents: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, contents).unwrap();
    path.to_str().unwrap().to_string()
}

/// Cell estimates from `z,x,y` CSV text, as `[z][y][x]`.
fn estimate_csv(text: &str) -> [[[f64; 2]; 2]; 2] {
    let mut counts = [[[0usize; 2]; 2]; 2];
    for line in text.lines().skip(1) {
        let v: Vec<usize> = line.split(',').map(|s| s.parse().unwrap()).collect();
        counts[v[0]][v[2]][v[1]] += 1;
    }
    let mut p = [[[0.0; 2]; 2]; 2];
    for z in 0..2 {
        let n: usize = counts[z].iter().flatten().sum();
        for y in 0..2 {
            for x in 0..2 {
                p[z][y][x] = counts[z][y][x] as f64 / n as f64;
            }
        }
    }
    p
}

#[test]
fn reproduce_meets_targets() {
    let out = run(&["reproduce", "--output", "json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&out);
    assert_eq!(v["seed"], 42);
    assert_eq!(v["result"]["passed"], true);
    let checks = v["result"]["checks"].as_array().unwrap();
    let l3 = checks.iter().find(|c| c["name"] == "lower bound 3").unwrap();
    assert!((l3["value"].as_f64().unwrap() - (5.0 / 2f64.sqrt() - 3.0) / 4.0).abs() < 1e-9);
    let ace = checks.iter().find(|c| c["name"] == "quantum ACE").unwrap();
    assert!(ace["value"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn reproduce_without_violation() {
    let out = run(&["reproduce", "--angles", "0,0,0,0"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("no violation"));
    let v = json(&run(&["reproduce", "--angles", "0,0,0,0", "--output", "json"]));
    assert!(v["result"]["violation"].as_f64().unwrap() <= 0.0);
}

#[test]
fn reproduce_chsh() {
    let out = run(&["reproduce", "--chsh", "--output", "json"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let s = v["result"]["experiment"]["chsh"]["s_value"].as_f64().unwrap();
    assert!((s.abs() - 2.0 * 2f64.sqrt()).abs() < 1e-9);
    assert_eq!(v["result"]["experiment"]["exceeds_classical_bound"], true);
    assert_eq!(v["result"]["local_strategies_max"], 2.0);
}

#[test]
fn reproduce_accepts_negative_angles() {
    assert_eq!(code(&run(&["reproduce", "--angles", "-45,0,67.5,22.5"])), 0);
    assert_eq!(code(&run(&["reproduce", "--angles", "1,2,3"])), 1);
}

#[test]
fn toy_distribution_violates_third_bound() {
    let dir = tempfile::tempdir().unwrap();
    let toy = run(&["toy"]);
    assert_eq!(code(&toy), 0);
    let path = write(dir.path(), "toy.json", &String::from_utf8(toy.stdout).unwrap());
    let out = run(&["bounds", "--input", &path, "--true-ace", "0", "--output", "json"]);
    assert_eq!(code(&out), 3);
    let v = json(&out);
    let violations = v["result"]["violations"].as_array().unwrap();
    assert_eq!(violations.len(), 1);
    assert_eq!(violations[0]["side"], "lower");
    assert_eq!(violations[0]["index"], 3);
    let diag = v["result"]["printed_upper_diagnostics"].as_array().unwrap();
    assert!(diag.iter().any(|d| d["index"] == 4 && d["below_max_lower"] == true));
}

#[test]
fn perfect_compliance_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "pc.json", r#"{"p":[[[0.6,0.0],[0.0,0.3]],[[0.4,0.0],[0.0,0.7]]],"pz":0.5}"#);
    let out = run(&["bounds", "--input", &path, "--true-ace", "0.3", "--output", "json"]);
    assert_eq!(code(&out), 0);
    let b = &json(&out)["result"]["bounds"];
    assert!((b["lp_lower"].as_f64().unwrap() - 0.3).abs() < 1e-9);
    assert!((b["lp_upper"].as_f64().unwrap() - 0.3).abs() < 1e-9);
}

#[test]
fn bounds_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.csv", "z,x,y\n0,0,1\n1,1,1\n2,0,1\n");
    let out = run(&["bounds", "--input", &bad]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));

    let one_arm = write(dir.path(), "arm.csv", "z,x,y\n0,0,1\n0,1,1\n");
    assert_eq!(code(&run(&["bounds", "--input", &one_arm])), 2);

    let invalid = write(dir.path(), "inv.json", r#"{"p":[[[0.5,0.5],[0.5,0.5]],[[0.5,0.0],[0.0,0.0]]],"pz":0.5}"#);
    assert_eq!(code(&run(&["bounds", "--input", &invalid])), 2);

    let truncated = write(dir.path(), "trunc.json", r#"{"p":[[[0.5"#);
    assert_eq!(code(&run(&["bounds", "--input", &truncated])), 1);

    let missing = dir.path().join("missing.csv");
    assert_eq!(code(&run(&["bounds", "--input", missing.to_str().unwrap()])), 1);
}

#[test]
fn bounds_from_records_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(dir.path(), "r.csv", "z,x,y\n0,0,0\n0,0,1\n1,1,1\n1,1,0\n");
    let out = run(&["bounds", "--input", &csv, "--output", "json"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["result"]["records"], 4);
    // Perfect compliance with equal recovery rates identifies ACE = 0.
    assert_eq!(v["result"]["bounds"]["natural_lower"], 0.0);
    assert_eq!(v["result"]["bounds"]["natural_upper"], 0.0);
}

#[test]
fn verify_reports_no_failures() {
    let out = run(&["verify", "--samples", "200", "--output", "json"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["result"]["passed"], true);
    assert!(v["result"]["quantum"]["worst_group_margin"].as_f64().unwrap() >= -1e-9);
    assert!(v["result"]["classical"]["max_lp_gap"].as_f64().unwrap() <= 1e-7);

    assert_eq!(code(&run(&["verify", "--samples", "1"])), 0);
    assert_eq!(code(&run(&["verify", "--samples", "3", "--dims", "3,2", "--mixing", "0.3"])), 0);
    assert_eq!(code(&run(&["verify", "--samples", "0"])), 1);
    assert_eq!(code(&run(&["verify", "--dims", "1,2"])), 1);
}

#[test]
fn simulate_toy_model_recovers_cells() {
    let dir = tempfile::tempdir().unwrap();
    let model = run(&["toy", "--model"]);
    assert_eq!(code(&model), 0);
    let path = write(dir.path(), "toy_model.json", &String::from_utf8(model.stdout).unwrap());
    let out = run(&["simulate", "--input", &path, "--samples", "1000000"]);
    assert_eq!(code(&out), 0);
    let p = estimate_csv(&String::from_utf8(out.stdout).unwrap());
    let a_plus = (1.0 + 1.0 / 2f64.sqrt()) / 4.0;
    let a_minus = (1.0 - 1.0 / 2f64.sqrt()) / 4.0;
    // (z, y, x) -> closed form at the default angles.
    for (z, y, x, target) in
        [(0, 1, 1, a_plus), (1, 1, 1, a_minus), (1, 1, 0, a_minus), (0, 0, 1, a_minus), (0, 1, 0, a_minus)]
    {
        assert!((p[z][y][x] - target).abs() < 3e-3, "z{z} y{y} x{x}: {}", p[z][y][x]);
    }
}

#[test]
fn simulate_classical_uniform_model() {
    let dir = tempfile::tempdir().unwrap();
    let q = vec![vec![1.0 / 16.0; 4]; 4];
    let text = serde_json::json!({ "q": q, "pz": 0.5 }).to_string();
    let path = write(dir.path(), "uniform.json", &text);
    let out = run(&["simulate", "--input", &path, "--samples", "200000", "--seed", "3"]);
    assert_eq!(code(&out), 0);
    let p = estimate_csv(&String::from_utf8(out.stdout).unwrap());
    for (z, arm) in p.iter().enumerate() {
        let take = arm[0][1] + arm[1][1];
        assert!((take - 0.5).abs() < 3e-3, "z{z}: {take}");
    }
}

#[test]
fn simulate_usage_and_model_errors() {
    let dir = tempfile::tempdir().unwrap();
    let toy = write(dir.path(), "toy.json", &String::from_utf8(run(&["toy"]).stdout).unwrap());
    assert_eq!(code(&run(&["simulate", "--input", &toy, "--samples", "0"])), 1);
    let bad = write(dir.path(), "bad.json", r#"{"q":[[1,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0.5]],"pz":0.5}"#);
    assert_eq!(code(&run(&["simulate", "--input", &bad, "--samples", "5"])), 2);
    let other = write(dir.path(), "other.json", r#"{"hello":1}"#);
    assert_eq!(code(&run(&["simulate", "--input", &other, "--samples", "5"])), 2);
}

#[test]
fn simulate_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let toy = write(dir.path(), "toy.json", &String::from_utf8(run(&["toy"]).stdout).unwrap());
    let a = run(&["simulate", "--input", &toy, "--samples", "1000", "--seed", "5"]);
    let b = run(&["simulate", "--input", &toy, "--samples", "1000", "--seed", "5"]);
    let c = run(&["simulate", "--input", &toy, "--samples", "1000", "--seed", "6"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn json_output_is_deterministic() {
    for args in [&["reproduce", "--output", "json"][..], &["verify", "--samples", "20", "--output", "json"][..]] {
        assert_eq!(run(args).stdout, run(args).stdout);
    }
}

#[test]
fn seed_comes_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_causal-bounds"))
        .args(["scan", "--step", "45", "--output", "json"])
        .env("CAUSAL_BOUNDS_SEED", "1234")
        .output()
        .unwrap();
    assert_eq!(json(&out)["seed"], 1234);
    let out = Command::new(env!("CARGO_BIN_EXE_causal-bounds"))
        .args(["scan", "--step", "45", "--output", "json", "--seed", "7"])
        .env("CAUSAL_BOUNDS_SEED", "1234")
        .output()
        .unwrap();
    assert_eq!(json(&out)["seed"], 7);
}

#[test]
fn scan_csv() {
    let out = run(&["scan", "--step", "22.5", "--output", "csv"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "alpha0,alpha1,beta0,beta1,violation");
    let v: f64 = lines[1].rsplit(',').next().unwrap().parse().unwrap();
    assert!(v >= (5.0 / 2f64.sqrt() - 3.0) / 4.0 - 1e-12);

    let all = run(&["scan", "--step", "45", "--all", "--output", "csv"]);
    assert_eq!(String::from_utf8(all.stdout).unwrap().lines().count(), 1 + 4usize.pow(4));
    assert_eq!(code(&run(&["scan", "--step", "0"])), 1);
    assert_eq!(code(&run(&["scan", "--step", "60"])), 1);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&run(&["--bogus"])), 1);
    assert_eq!(code(&run(&["bounds"])), 1);
    assert_eq!(code(&run(&["reproduce", "--tol", "-1"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}
