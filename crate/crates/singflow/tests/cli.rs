use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_singflow"))
}

fn scenario_file(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn run_scenario(path: &Path, out: &Path, threads: &str) -> Output {
    bin()
        .env("SINGFLOW_THREADS", threads)
        .arg("run")
        .arg(path)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

const HEAT: &str = r#"{
  "name": "heat",
  "experiment": "classify",
  "preset": "p_heat",
  "params": { "p": 2, "beta1": 1, "eps": 0.1 }
}"#;

#[test]
fn classify_heat_reports_nonexistence() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario_file(dir.path(), "heat.json", HEAT);
    let out = dir.path().join("out");
    let res = run_scenario(&sc, &out, "2");
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let r = report(&out);
    assert_eq!(r["verdict"], "not_exists");
    assert_eq!(r["result"]["verdict"], "not_exists");
    let csv = fs::read_to_string(out.join("classify.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "verdict,not_exists"));
}

#[test]
fn wave_scenario_has_unit_speed() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario_file(
        dir.path(),
        "wave.json",
        r#"{"name": "w", "experiment": "wave", "preset": "curvature", "params": {"beta2": 1}, "b": 1.5707963267948966}"#,
    );
    let out = dir.path().join("out");
    let res = run_scenario(&sc, &out, "2");
    assert_eq!(res.status.code(), Some(0));
    let c = report(&out)["result"]["c"].as_f64().unwrap();
    assert!((c - 1.0).abs() < 1e-8, "c = {c}");
}

#[test]
fn inline_flags_match_scenario_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("inline");
    let res = bin()
        .args(["wave", "--name", "w", "--preset", "curvature", "--params", "beta2=1", "--b", "1.5707963267948966"])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let c = report(&out)["result"]["c"].as_f64().unwrap();
    assert!((c - 1.0).abs() < 1e-8);
}

#[test]
fn malformed_json_is_an_error_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario_file(dir.path(), "bad.json", "{\n  \"name\": \"x\",\n  \"experiment\": \"wave\"\n  \"preset\": 1\n}");
    let res = run_scenario(&sc, &dir.path().join("out"), "1");
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn unknown_field_and_bad_params_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario_file(dir.path(), "extra.json", r#"{"name": "x", "experiment": "verify", "colour": 1}"#);
    assert_eq!(run_scenario(&sc, &dir.path().join("a"), "1").status.code(), Some(1));
    let res = bin().args(["classify", "--preset", "power", "--params", "alpha=0,beta"]).output().unwrap();
    assert_eq!(res.status.code(), Some(1));
    let res = bin().args(["classify", "--preset", "curvature", "--params", "beta2=1", "--u0", "cubic:1"]).output().unwrap();
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn failed_expectation_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario_file(
        dir.path(),
        "heat_caps.json",
        r#"{"name": "h", "experiment": "capstudy", "preset": "p_heat", "params": {"p": 2, "beta1": 1, "eps": 0.1},
            "n": 40, "caps": [10, 20, 40, 80], "probe": [0.0, 0.1], "expect": "saturating"}"#,
    );
    let out = dir.path().join("out");
    assert_eq!(run_scenario(&sc, &out, "2").status.code(), Some(2));
    let r = report(&out);
    assert_eq!(r["pass"], false);
    assert_eq!(r["result"]["verdict"], "diverging");
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn reruns_are_bit_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let scenarios = [
        (
            "barrier.json",
            r#"{"name": "b", "experiment": "barrier", "preset": "power", "params": {"alpha": 0, "beta": 0.5}, "b": 2,
                "barrier": {"family": "super_family", "params": {"L0": 2.5, "nu": 1000}}, "samples": 2000}"#,
        ),
        (
            "solve.json",
            r#"{"name": "s", "experiment": "solve", "preset": "curvature", "params": {"beta2": 1},
                "u0": "polynomial:0,0.5,1", "n": 60, "cap": 20, "t_end": 0.02}"#,
        ),
        (
            "caps.json",
            r#"{"name": "c", "experiment": "capstudy", "preset": "p_heat", "params": {"p": 2, "beta1": 1, "eps": 0.1},
                "n": 40, "caps": [10, 20, 40, 80], "probe": [0.0, 0.1], "expect": "diverging"}"#,
        ),
    ];
    for (file, body) in scenarios {
        let sc = scenario_file(dir.path(), file, body);
        let one = dir.path().join(format!("{file}.1"));
        let four = dir.path().join(format!("{file}.4"));
        assert_eq!(run_scenario(&sc, &one, "1").status.code(), Some(0), "{file}");
        assert_eq!(run_scenario(&sc, &four, "4").status.code(), Some(0), "{file}");
        let (a, b) = (snapshot(&one), snapshot(&four));
        assert!(a.len() >= 3);
        assert_eq!(a, b, "{file}");
    }
}

#[test]
fn manifest_records_scenario_and_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario_file(
        dir.path(),
        "b.json",
        r#"{"name": "b", "experiment": "barrier", "preset": "power", "params": {"alpha": 0, "beta": 1},
            "barrier": {"family": "sub_vl", "params": {"L": 50}}, "samples": 1000}"#,
    );
    let out = dir.path().join("out");
    assert_eq!(run_scenario(&sc, &out, "2").status.code(), Some(0));
    let m: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["scenario"]["barrier"]["params"]["L"], 50.0);
    assert!(m["seeds"]["barrier_samples"].as_u64().is_some());
    assert!(m["constants"]["c_L"].as_f64().unwrap() > 0.0);
    let text = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(!text.contains("time\""), "manifest must not carry timestamps");
}
