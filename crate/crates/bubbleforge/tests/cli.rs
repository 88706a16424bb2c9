use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bubbleforge"))
        .args(args)
        .output()
        .expect("spawn bubbleforge")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn quantity(v: &Value, key: &str) -> f64 {
    v["quantities"][key]["value"].as_f64().unwrap()
}

#[test]
fn constants_report() {
    let out = run(&["constants", "--k", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    assert!((quantity(&v, "t_star") - 2.0 / 9.0).abs() < 1e-12);
    assert_eq!(v["quantities"]["t_star"]["provenance"], "paper");

    let v = json(&run(&["constants", "--k", "3"]));
    assert!((quantity(&v, "t_star") - 32.0 / 27.0).abs() < 1e-12);

    assert_eq!(run(&["constants", "--k", "1"]).status.code(), Some(2));
}

#[test]
fn delta_report() {
    let beta = format!("{}", -(4f64.exp()) / 8.0);
    let v = json(&run(&["delta", "--beta", &beta]));
    assert!((quantity(&v, "delta") / (-8f64).exp() - 1.0).abs() < 1e-12);
    assert!(quantity(&v, "residual") < 1e-12);

    let v = json(&run(&["delta", "--beta", "-1e6"]));
    assert!(quantity(&v, "delta") > 0.0);
    assert!(quantity(&v, "residual") < 1e-12);

    assert_eq!(run(&["delta", "--beta", "-1.0"]).status.code(), Some(2));

    let out = run(&["delta", "--beta", "-1.4"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["scan", "--steps", "1"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(
        run(&["verify", "--suite", "msystem", "--t", "-1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["verify", "--suite", "msystem", "--rel-tol", "0"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn scan_csv_has_a_minimum_near_t_star() {
    let out = run(&[
        "scan", "--t-min", "0.1", "--t-max", "0.4", "--steps", "7", "--format", "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let mut rd = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(
        rd.headers().unwrap().iter().collect::<Vec<_>>(),
        ["t", "f_numeric", "f_predicted", "theta", "converged"]
    );
    let rows: Vec<(f64, f64)> = rd
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[2].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 7);
    let i = (0..rows.len())
        .min_by(|&a, &b| rows[a].1.total_cmp(&rows[b].1))
        .unwrap();
    assert!((rows[i].0 - 2.0 / 9.0).abs() <= 0.05 + 1e-12);
    assert!(rows[..=i].windows(2).all(|w| w[1].1 < w[0].1));
    assert!(rows[i..].windows(2).all(|w| w[1].1 > w[0].1));
}

#[test]
fn verify_msystem_passes_and_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let out = run(&[
        "verify",
        "--suite",
        "msystem",
        "--q",
        "2",
        "--k",
        "2",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(v["passed"], true);
    let checks = v["checks"].as_array().unwrap();
    let id = checks
        .iter()
        .find(|c| c["name"] == "reduction_identity")
        .unwrap();
    assert!(id["measured"].as_f64().unwrap() < 1e-11);
    for c in checks {
        assert!(c["tolerance"].is_number());
        assert!(c["provenance"].is_string());
    }
}

#[test]
fn verify_csv_lists_checks() {
    let out = run(&["verify", "--suite", "identities", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(
        header,
        "suite,name,passed,measured,tolerance,provenance,converged"
    );
    assert!(text.lines().skip(1).all(|l| l.contains(",true,")));
}

#[test]
fn unconverged_quadrature_exits_3() {
    let out = run(&["verify", "--suite", "zkt", "--max-subdivisions", "10"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["converged"], false);
}
