use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn rauzy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rauzy"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn code(args: &[&str]) -> i32 {
    rauzy(args).status.code().unwrap()
}

fn temp_file(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rauzy-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn class_listing() {
    let o = rauzy(&["class", "--pi", "3 2 1"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("event=class step=0 nodes=3 edges=6"));
    let json: Value = serde_json::from_str(&stdout(&rauzy(&["class", "--pi", "3 2 1", "--format", "json"]))).unwrap();
    assert_eq!(json["nodes"].as_array().unwrap().len(), 3);
    assert_eq!(json["edges"].as_array().unwrap().len(), 6);

    let single: Value = serde_json::from_str(&stdout(&rauzy(&["class", "--pi", "2 1", "--format", "json"]))).unwrap();
    assert_eq!(single["nodes"].as_array().unwrap().len(), 1);

    assert_eq!(code(&["class", "--pi", "1 2"]), 2);
    assert_eq!(code(&["class", "--pi", "13 12 11 10 9 8 7 6 5 4 3 2 1"]), 2);
}

#[test]
fn positive_word_round_trips() {
    let o = rauzy(&["positive-word", "--pi", "2 1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let word = text.lines().next().unwrap();
    assert_eq!(word, "a:1@2 1;b:1@2 1");

    let q: rauzy_core::Word = word.parse().unwrap();
    assert!(q.matrix(2).is_positive());
    assert_eq!(code(&["positive-word", "--pi", "2 1", "--max-len", "0"]), 3);
}

#[test]
fn orbit_from_a_given_start() {
    let o = rauzy(&["orbit", "--pi", "2 1", "--steps", "2", "--seed", "7", "--backend", "float", "--lambda", "0.3,0.7"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][..2], ["b", "2"]);

    // (3/10, 7/10) reaches a tie on the exact backend
    let exact = rauzy(&["orbit", "--pi", "2 1", "--steps", "5", "--backend", "exact", "--lambda", "3/10,7/10"]);
    assert_eq!(exact.status.code(), Some(4));
    assert!(stderr(&exact).contains("event=non_generic"));
    assert!(stdout(&exact).starts_with("op,count,start,pi,flow_time,lambda1,lambda2\n"));
}

#[test]
fn cap_exceeded_exits_numeric() {
    let o = rauzy(&["orbit", "--pi", "2 1", "--steps", "1", "--lambda", "0.001,0.999", "--cap", "10"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("event=cap_exceeded step=0"));
}

#[test]
fn config_validation() {
    assert_eq!(code(&["correlations", "--pi", "2 1", "--steps", "1000", "--burn-in", "1000"]), 2);
    assert_eq!(code(&["orbit", "--pi", "2 1", "--cap", "0"]), 2);
    assert_eq!(code(&["orbit", "--pi", "2 1", "--bogus"]), 2);
    assert_eq!(code(&["return-times", "--pi", "2 1", "--epsilon", "-1"]), 2);
    assert_eq!(code(&["orbit", "--pi", "2 1", "--lambda", "0.3,x"]), 2);
}

#[test]
fn config_files_merge_under_flags() {
    let cfg = temp_file("orbit.json", r#"{"pi": "2 1", "steps": 2, "lambda": "0.3,0.7"}"#);
    let cfg = cfg.to_str().unwrap();
    let from_file = rauzy(&["orbit", "--config", cfg]);
    assert!(from_file.status.success());
    assert_eq!(csv_rows(&stdout(&from_file)).len(), 2);

    let overridden = rauzy(&["orbit", "--config", cfg, "--steps", "1"]);
    assert_eq!(csv_rows(&stdout(&overridden)).len(), 1);

    let bad = temp_file("bad.json", r#"{"pi": "2 1", "stepz": 3}"#);
    assert_eq!(code(&["orbit", "--config", bad.to_str().unwrap()]), 2);
}

#[test]
fn help_lists_every_flag() {
    let expected: &[(&str, &[&str])] = &[
        ("class", &["--pi", "--config", "--out", "--format", "--max-dim"]),
        ("positive-word", &["--pi", "--max-len", "--max-count"]),
        ("orbit", &["--pi", "--steps", "--seed", "--backend", "--lambda", "--cap"]),
        (
            "correlations",
            &["--steps", "--burn-in", "--seed", "--streams", "--workers", "--n-max", "--phi", "--psi", "--floor-mult", "--alpha"],
        ),
        ("return-times", &["--q", "--n-max", "--epsilon", "--backend", "--survival-out", "--streams", "--workers"]),
        ("compare", &["--q", "--samples", "--steps", "--backend"]),
        ("zr-selftest", &["--pi", "--samples", "--seed", "--tol"]),
    ];
    for (cmd, flags) in expected {
        let help = stdout(&rauzy(&[cmd, "--help"]));
        for flag in *flags {
            assert!(help.contains(flag), "{cmd} --help lacks {flag}");
        }
    }
}

#[test]
fn zippered_selftest() {
    let o = rauzy(&["zr-selftest", "--pi", "2 1", "--samples", "100", "--seed", "1", "--format", "json"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["valid"], 100);
    assert!(v["commutation_residual"].as_f64().unwrap() < 1e-12);
}

#[test]
fn outputs_are_deterministic() {
    let args = ["return-times", "--pi", "3 2 1", "--steps", "20000", "--seed", "3", "--streams", "2"];
    let one = rauzy(&[&args[..], &["--workers", "1"]].concat());
    let two = rauzy(&[&args[..], &["--workers", "2"]].concat());
    assert!(one.status.success());
    assert_eq!(one.stdout, two.stdout);
}

#[test]
fn csv_and_json_agree() {
    let args = ["return-times", "--pi", "2 1", "--steps", "5000", "--seed", "1"];
    let csv = stdout(&rauzy(&args));
    let json: Value = serde_json::from_str(&stdout(&rauzy(&[&args[..], &["--format", "json"]].concat()))).unwrap();
    let records = json["records"].as_array().unwrap();
    let rows = csv_rows(&csv);
    assert_eq!(rows.len(), records.len());
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    for (row, rec) in rows.iter().zip(records) {
        for (name, cell) in header.iter().zip(row) {
            let value: f64 = cell.parse().unwrap();
            assert_eq!(value, rec[name].as_f64().unwrap(), "{name}");
        }
    }

    let orbit = ["orbit", "--pi", "3 2 1", "--steps", "20", "--seed", "2"];
    let csv = stdout(&rauzy(&orbit));
    let json: Value = serde_json::from_str(&stdout(&rauzy(&[&orbit[..], &["--format", "json"]].concat()))).unwrap();
    for (row, rec) in csv_rows(&csv).iter().zip(json.as_array().unwrap()) {
        assert_eq!(row[0], rec["op"].as_str().unwrap());
        assert_eq!(row[1].parse::<u64>().unwrap(), rec["count"].as_u64().unwrap());
        assert_eq!(row[4].parse::<f64>().unwrap(), rec["flow_time"].as_f64().unwrap());
        let lambda: Vec<f64> = row[5..].iter().map(|c| c.parse().unwrap()).collect();
        let expected: Vec<f64> = rec["lambda"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
        assert_eq!(lambda, expected);
    }
}
