use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn spade(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spade"))
        .args(args)
        .env_remove("SPADE_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const TRIANGLE: &str = "a\tb\t1\t1\nb\tc\t1\t2\na\tc\t1\t3\nc\td\t1\t4\n";

#[test]
fn detect_prints_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "tri.tsv", TRIANGLE);
    let out = spade(&["detect", "--input", &input, "--metric", "dw"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["schema"], "spade-report/1");
    assert_eq!(v["kind"], "detect");
    assert_eq!(v["community"], serde_json::json!(["a", "b", "c", "d"]));
    assert_eq!(v["density"], 1.0);
    assert_eq!(v["stats"]["touched_vertices"], 4);
}

#[test]
fn bad_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.tsv");
    let out = spade(&["detect", "--input", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    let neg = write(dir.path(), "neg.tsv", "a\tb\t-1\n");
    assert_eq!(spade(&["detect", "--input", &neg]).status.code(), Some(1));
    assert_eq!(spade(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(spade(&["--help"]).status.code(), Some(0));
}

#[test]
fn replay_writes_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("fraud.tsv");
    let gen = spade(&[
        "gen", "--kind", "fraud", "--vertices", "40", "--edges", "200", "--seed", "3",
        "--output", input.to_str().unwrap(),
    ]);
    assert_eq!(gen.status.code(), Some(0));
    let report = dir.path().join("replay.json");
    let out = spade(&[
        "replay", "--input", input.to_str().unwrap(), "--mode", "group", "--metric", "fd",
        "--clock", "logical", "--report", report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["kind"], "replay");
    assert_eq!(v["mode"], "group");
    assert!(v["events"].as_u64().unwrap() > 200);
}

#[test]
fn verify_passes() {
    let out = spade(&["verify", "--seed", "7", "--cases", "20"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["all_passed"], true);
}

#[test]
fn seed_can_come_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed_flag: &str, env: Option<&str>| {
        let path = dir.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_spade"));
        cmd.args(["gen", "--vertices", "30", "--edges", "60", "--seed", seed_flag, "--output"])
            .arg(&path)
            .env_remove("SPADE_SEED");
        if let Some(s) = env {
            cmd.env("SPADE_SEED", s);
        }
        assert!(cmd.output().unwrap().status.success());
        fs::read_to_string(path).unwrap()
    };
    let from_flag = run("a.tsv", "9", None);
    let from_env = run("b.tsv", "1", Some("9"));
    let other = run("c.tsv", "1", None);
    assert_eq!(from_flag, from_env);
    assert_ne!(from_flag, other);
}

#[test]
fn generated_stream_parses_back() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.tsv");
    let out = spade(&["gen", "--vertices", "50", "--edges", "120", "--power-law", "2.2", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let stream = spade_core::parse_stream(&path).unwrap();
    assert_eq!(stream.len(), 120);
    let det = spade(&["detect", "--input", path.to_str().unwrap()]);
    assert!(json(&det)["vertices"].as_u64().unwrap() <= 50);
}

#[test]
fn enumerate_and_window_run() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "tri.tsv", TRIANGLE);
    let out = spade(&["enumerate", "--input", &input, "--k", "3", "--removal", "incremental"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["kind"], "enumerate");
    let out = spade(&[
        "window", "--input", &input, "--base-start", "1", "--base-end", "3",
        "--target-start", "2", "--target-end", "4",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["case"], "shifts_later");
}
