use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn refinet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_refinet")).args(args).output().expect("binary runs")
}

fn refinet_with_cap(cap: &str, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_refinet"))
        .env("REFINET_MAX_BREAKPOINTS", cap)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn read_json(p: &str) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn csv_rows(p: &str) -> Vec<Vec<f64>> {
    fs::read_to_string(p)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn write_zero_mask_rule(dir: &Path) -> String {
    let p = dir.join("zero.json");
    fs::write(
        &p,
        r#"{"M": 2, "p": 1, "L": 1,
            "mask": [{"j": 0, "A": [[0.0]]}, {"j": 1, "A": [[0.0]]}],
            "curve": [[0.25, 0.0], [0.5, 1.0], [0.75, 0.0]]}"#,
    )
    .unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn build_writes_anchored_koch() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "koch.json");
    let run = refinet(&["build", "--example", "koch", "--stage", "3", "--mode", "anchored", "--out", &out]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let v = read_json(&out);
    assert_eq!(v["meta"]["builder"], "anchored");
    assert_eq!(v["input_dim"], 1);
}

#[test]
fn build_stacks_gosper_states() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "gosper.json");
    assert_eq!(code(&refinet(&["build", "--example", "gosper", "--stage", "2", "--out", &out])), 0);
    let v = read_json(&out);
    assert_eq!(v["meta"]["builder"], "stacked");
    let last = v["layers"].as_array().unwrap().last().unwrap().clone();
    assert_eq!(last["bias"].as_array().unwrap().len(), 4);
}

#[test]
fn zero_mask_network_is_zero() {
    let dir = TempDir::new().unwrap();
    let rule = write_zero_mask_rule(dir.path());
    let csv = path(&dir, "zero.csv");
    let run = refinet(&["sample", "--rule", &rule, "--stage", "3", "--backend", "network", "--resolution", "64", "--out", &csv]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let rows = csv_rows(&csv);
    assert_eq!(rows.len(), 65);
    assert!(rows.iter().all(|r| r[1] == 0.0));
    let alias = refinet(&["sample", "--spec", &rule, "--stage", "1", "--resolution", "8", "--out", &csv]);
    assert_eq!(code(&alias), 0);
}

#[test]
fn verify_passes_and_catches_corruption() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "koch.json");
    assert_eq!(code(&refinet(&["verify", "--example", "koch", "--stage", "3"])), 0);
    assert_eq!(code(&refinet(&["build", "--example", "koch", "--stage", "3", "--out", &out])), 0);
    let report = path(&dir, "report.json");
    let run = refinet(&["verify", "--example", "koch", "--stage", "3", "--net", &out, "--out", &report]);
    assert_eq!(code(&run), 0);
    assert_eq!(read_json(&report)["pass"], true);
    let mut v = read_json(&out);
    let last = v["layers"].as_array_mut().unwrap().last_mut().unwrap();
    let b = last["bias"][0].as_f64().unwrap();
    last["bias"][0] = serde_json::json!(b + 0.5);
    let bad = path(&dir, "bad.json");
    fs::write(&bad, serde_json::to_string(&v).unwrap()).unwrap();
    let run = refinet(&["verify", "--example", "koch", "--stage", "3", "--net", &bad, "--json"]);
    assert_eq!(code(&run), 1);
    let printed: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(printed["pass"], false);
}

#[test]
fn error_exit_codes() {
    let dir = TempDir::new().unwrap();
    let run = refinet(&["verify", "--example", "koch", "--stage", "2", "--mode", "homogeneous"]);
    assert_eq!(code(&run), 3);
    assert_eq!(code(&refinet_with_cap("10", &["verify", "--example", "koch", "--stage", "3"])), 4);
    let bad = path(&dir, "bad.json");
    fs::write(&bad, "{").unwrap();
    assert_eq!(code(&refinet(&["verify", "--rule", &bad])), 2);
    assert_eq!(code(&refinet(&["stats", "--net", &bad])), 2);
    assert_eq!(code(&refinet(&["verify", "--example", "peano"])), 2);
    assert_eq!(code(&refinet(&["verify", "--example", "koch", "--mode", "sideways"])), 2);
}

#[test]
fn sample_row_count_follows_resolution() {
    let dir = TempDir::new().unwrap();
    let csv = path(&dir, "levy.csv");
    let run = refinet(&["sample", "--example", "levy", "--stage", "4", "--resolution", "100", "--out", &csv]);
    assert_eq!(code(&run), 0);
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,y1,y2");
    assert_eq!(text.lines().count(), 102);
}

#[test]
fn oracle_and_network_samples_agree() {
    let dir = TempDir::new().unwrap();
    let a = path(&dir, "oracle.csv");
    let b = path(&dir, "network.csv");
    for (backend, out) in [("oracle", &a), ("network", &b)] {
        let run = refinet(&["sample", "--example", "hilbert", "--stage", "2", "--backend", backend, "--resolution", "500", "--out", out]);
        assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    }
    for (x, y) in csv_rows(&a).iter().zip(csv_rows(&b)) {
        assert!(x.iter().zip(&y).all(|(u, v)| (u - v).abs() <= 1e-6));
    }
    let svg = path(&dir, "curve.svg");
    let run = refinet(&["render", "--example", "hilbert", "--stage", "2", "--backend", "network", "--out", &svg]);
    assert_eq!(code(&run), 0);
    let text = fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") || text.starts_with("<?xml"));
    assert!(text.contains("polyline"));
}

#[test]
fn stats_for_network_and_stage_range() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "levy.json");
    assert_eq!(code(&refinet(&["build", "--example", "levy", "--stage", "2", "--out", &out])), 0);
    let run = refinet(&["stats", "--net", &out]);
    assert_eq!(code(&run), 0);
    let text = String::from_utf8_lossy(&run.stdout);
    assert!(text.contains("builder   anchored") && text.contains("depth"));
    let run = refinet(&["stats", "--example", "levy", "--stages", "1..3"]);
    assert_eq!(code(&run), 0);
    assert_eq!(String::from_utf8_lossy(&run.stdout).lines().count(), 4);
    assert_eq!(code(&refinet(&["stats", "--example", "levy", "--stages", "3..1"])), 2);
}
