use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn ym2d(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ym2d"))
        .args(args)
        .env_remove("YM2D_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn data(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "data", name].iter().collect();
    p.to_string_lossy().into_owned()
}

/// Header and rows of a CSV emission, metadata lines dropped.
fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let head = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (head, rows)
}

#[test]
fn plane_master_field() {
    let text = stdout(&ym2d(&["masterfield", "--plane", "--t", "1", "--n", "1"]));
    let (head, rows) = csv_rows(&text);
    assert_eq!(head, ["t", "n", "mu"]);
    let mu: f64 = rows[0][2].parse().unwrap();
    assert!((mu - 0.6065307).abs() < 5e-8, "{mu}");
    assert!(text.contains("# version: "));
    assert!(text.contains("# config: "));
}

#[test]
fn validate_example_map() {
    let (head, rows) = csv_rows(&stdout(&ym2d(&["map", "--validate", &data("example_torus.json")])));
    let genus = head.iter().position(|h| h == "genus").unwrap();
    assert_eq!(rows[0][genus], "1");
    assert_eq!(rows[0][1], "3");
}

#[test]
fn extract_and_reread_disc() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("disc.json");
    let args = [
        "map",
        "--extract",
        &data("example_torus.json"),
        "--faces",
        "1,2",
        "--loop",
        "d,e,f",
        "--emit",
        out.to_str().unwrap(),
    ];
    let (_, rows) = csv_rows(&stdout(&ym2d(&args)));
    assert_eq!(rows[0][..4], ["3", "2", "2", "2"]);
    let (_, rows) = csv_rows(&stdout(&ym2d(&["map", "--validate", out.to_str().unwrap()])));
    assert_eq!(rows[0][4], "0");
}

#[test]
fn partition_gap_decreases() {
    let (head, rows) = csv_rows(&stdout(&ym2d(&[
        "partition", "--family", "B", "--genus", "1", "--area", "2", "--ranks", "10,20,40,80",
    ])));
    let gap = head.iter().position(|h| h == "gap").unwrap();
    let gaps: Vec<f64> = rows.iter().map(|r| r[gap].parse().unwrap()).collect();
    assert_eq!(gaps.len(), 4);
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

#[test]
fn csv_and_json_agree() {
    let args = ["wilson-torus", "--family", "C", "--ranks", "2", "--area", "1,4", "--k", "1,2"];
    let csv_text = stdout(&ym2d(&args));
    let json_text = stdout(&ym2d(&[&args[..], &["--format", "json"]].concat()));
    let (head, rows) = csv_rows(&csv_text);
    let doc: Value = serde_json::from_str(&json_text).unwrap();
    let jrows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), jrows.len());
    for (r, j) in rows.iter().zip(jrows) {
        for (h, v) in head.iter().zip(r) {
            match v.parse::<f64>() {
                Ok(x) => assert_eq!(x, j[h].as_f64().unwrap(), "{h}"),
                Err(_) => assert_eq!(v, j[h].as_str().unwrap()),
            }
        }
    }
    assert_eq!(doc["metadata"]["command"], "wilson-torus");
}

#[test]
fn output_file_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("dk.csv");
    let out = Command::new(env!("CARGO_BIN_EXE_ym2d"))
        .args(["dk", "--points", "8", "-o", p.to_str().unwrap()])
        .env("YM2D_THREADS", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
    let (_, rows) = csv_rows(&std::fs::read_to_string(&p).unwrap());
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r[1].parse::<f64>().unwrap() > 0.0));
}

#[test]
fn samplers_are_reproducible() {
    let bm = ["bm", "--family", "U", "--rank", "4", "--samples", "20", "--n", "1,2", "--seed", "7"];
    assert_eq!(stdout(&ym2d(&bm)), stdout(&ym2d(&bm)));
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let mc = [
        "mcmc",
        "--family",
        "U",
        "--rank",
        "1",
        "--map",
        &data("one_face_torus.json"),
        "--sweeps",
        "200",
        "--burn-in",
        "50",
        "--loop",
        "a;b",
        "--trace",
        trace.to_str().unwrap(),
    ];
    let first = stdout(&ym2d(&mc));
    assert_eq!(first, stdout(&ym2d(&mc)));
    let t = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(t.lines().count(), 1 + 2 * 200);
    assert!(t.starts_with("sweep,observable,re,im"));
}

#[test]
fn exit_codes() {
    assert_eq!(ym2d(&["partition", "--family", "Q", "--area", "1", "--ranks", "1"]).status.code(), Some(2));
    assert_eq!(ym2d(&["partition", "--family", "B", "--area=-1", "--ranks", "1"]).status.code(), Some(2));
    assert_eq!(ym2d(&["dk", "--t", "20"]).status.code(), Some(2));
    assert_eq!(ym2d(&["map", "--validate", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(ym2d(&["mcmc", "--family", "C", "--rank", "3", "--sweeps", "1"]).status.code(), Some(2));
    let numeric = ym2d(&["partition", "--family", "C", "--area", "0.1", "--ranks", "3", "--max-size", "2"]);
    assert_eq!(numeric.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&numeric.stderr).contains("tail bound"));
}
