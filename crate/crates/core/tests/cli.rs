//! End-to-end runs of the `wrp` binary: exit codes, error JSON, determinism.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use tempfile::TempDir;

const MODEL: &str = r#"{"schema_version":1,"mu":-1.0,"sigma":1.0,"zeta":0.9,"jumps":{"kind":"gamma_negative","params":{"alpha":1.0,"beta":1.0}}}"#;
const PUT: &str = r#"{"schema_version":1,"kind":"put","K":-0.2,"zeta":0.9}"#;
const INDICATOR: &str = r#"{"schema_version":1,"kind":"indicator","K":-0.2,"zeta":0.9}"#;

struct Workdir {
    dir: TempDir,
}

impl Workdir {
    fn new() -> Self {
        let w = Workdir { dir: TempDir::new().unwrap() };
        w.write("model.json", MODEL);
        w.write("put.json", PUT);
        w.write("indicator.json", INDICATOR);
        w
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, text: &str) {
        fs::write(self.path(name), text).unwrap();
    }

    fn wrp(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_wrp")).current_dir(self.dir.path()).args(args).output().unwrap()
    }
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_json(o: &Output) -> serde_json::Value {
    let text = String::from_utf8(o.stderr.clone()).unwrap();
    let line = text.lines().rev().find(|l| l.starts_with('{')).expect("error JSON on stderr");
    serde_json::from_str(line).unwrap()
}

fn csv_column(text: &str, col: usize) -> Vec<f64> {
    text.lines().skip(1).map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect()
}

#[test]
fn help_exits_zero() {
    let w = Workdir::new();
    let o = w.wrp(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("symmetry"));
}

#[test]
fn missing_model_is_a_usage_error() {
    let w = Workdir::new();
    let o = w.wrp(&["symmetry", "--model", "absent.json", "--payoff", "put.json", "--x-grid", "0.1:1:10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!error_json(&o)["error"].as_str().unwrap().is_empty());
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let w = Workdir::new();
    let o = w.wrp(&["joint", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(error_json(&o)["hint"].is_string());
}

#[test]
fn indicator_image_needs_an_integrable_preimage() {
    let w = Workdir::new();
    let o = w.wrp(&["symmetry", "--model", "model.json", "--payoff", "indicator.json", "--x-grid", "0.1:1:10"]);
    assert_eq!(o.status.code(), Some(2));
    let e = error_json(&o);
    let all = format!("{} {}", e["error"], e["hint"]).to_lowercase();
    assert!(all.contains("requiresl1"), "{all}");
}

#[test]
fn bad_schema_version_is_rejected() {
    let w = Workdir::new();
    w.write("v2.json", &MODEL.replace("\"schema_version\":1", "\"schema_version\":2"));
    let o = w.wrp(&["density", "--model", "v2.json", "--t", "1", "--x", "-1:1:5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn symmetry_csv_has_header_and_rows() {
    let w = Workdir::new();
    let o = w.wrp(&["symmetry", "--model", "model.json", "--payoff", "put.json", "--x-grid", "0.1:1:10"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("x,g,err_bound,im_residual"));
    assert_eq!(text.lines().count(), 11);
    assert!(csv_column(&text, 1).iter().all(|g| g.is_finite()));
}

#[test]
fn hedge_accepts_negative_grids_and_writes_files() {
    let w = Workdir::new();
    let o = w.wrp(&[
        "--format",
        "json",
        "hedge",
        "--model",
        "model.json",
        "--payoff",
        "put.json",
        "--x-grid",
        "-0.5:0.5:11",
        "--out",
        "hedge.json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(w.path("hedge.json")).unwrap()).unwrap();
    assert_eq!(v["schema_version"], 1);
}

#[test]
fn joint_is_long_format() {
    let w = Workdir::new();
    let o = w.wrp(&["joint", "--model", "model.json", "--K", "-0.2", "--x", "0:0.2:3", "--T", "0.5:1:2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("x,T,prob"));
    assert_eq!(text.lines().count(), 7);
    assert!(csv_column(&text, 2).iter().all(|p| (0.0..=1.0).contains(p)));
}

#[test]
fn mc_is_reproducible_and_thread_invariant() {
    let w = Workdir::new();
    let args = |threads: &str| {
        vec![
            "--threads".to_string(),
            threads.into(),
            "mc".into(),
            "--model".into(),
            "model.json".into(),
            "--T".into(),
            "1".into(),
            "--paths".into(),
            "2e4".into(),
            "--steps".into(),
            "1e3".into(),
            "--seed".into(),
            "7".into(),
            "--estimate".into(),
            "joint".into(),
            "--K".into(),
            "-0.2".into(),
            "--x".into(),
            "0.1".into(),
        ]
    };
    let run = |threads: &str| {
        let a = args(threads);
        let o = w.wrp(&a.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        o.stdout
    };
    let one = run("1");
    assert_eq!(one, run("1"));
    let (a, b) = (String::from_utf8(one).unwrap(), String::from_utf8(run("4")).unwrap());
    for (x, y) in csv_column(&a, 1).iter().zip(csv_column(&b, 1)) {
        assert!((x - y).abs() <= 1e-12);
    }
}

#[test]
fn mc_export_writes_a_batch_file() {
    let w = Workdir::new();
    let o = w.wrp(&[
        "mc",
        "--model",
        "model.json",
        "--T",
        "1",
        "--paths",
        "1e3",
        "--steps",
        "100",
        "--estimate",
        "max",
        "--export",
        "batch.bin",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let bytes = fs::read(w.path("batch.bin")).unwrap();
    assert_eq!(&bytes[..4], b"WRPB");
    let (x, m) = wrp_core::mc::read_batch_columns(bytes.as_slice()).unwrap();
    assert_eq!(x.len(), 1000);
    assert!(x.iter().zip(&m).all(|(&x, &m)| m >= x.max(0.0)));
}

#[test]
fn mc_rejects_undersized_runs() {
    let w = Workdir::new();
    let o = w.wrp(&["mc", "--model", "model.json", "--T", "1", "--paths", "10", "--steps", "100", "--estimate", "max"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_quick_writes_a_passing_report() {
    let w = Workdir::new();
    let o = w.wrp(&["verify", "--suite", "quick", "--seed", "42", "--out", "report.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(w.path("report.json")).unwrap()).unwrap();
    assert_eq!(v["pass"], true);
    assert_eq!(v["checks"].as_array().unwrap().len(), 7);
}
