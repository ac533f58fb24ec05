use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cble_lab::cli::SimulationSummary;
use cble_lab::lyapunov::ExplosionCertificate;
use cble_lab::model::validate_model;
use cble_lab::montecarlo::{PhaseDiagram, CSV_SCHEMA_HEADER};
use cble_lab::simulate::PathRecord;
use tempfile::TempDir;

const STABLE: &str = r#"
[model]
y0 = 10.0
[model.branching]
mu = { kind = "pure_stable", a_bar = 1.0, alpha = 0.5 }
[sim]
dt_max = 2e-3
eps_jump = 2e-2
k_explode = 1e6
t_horizon = 2.0
seed = 7
[lyapunov]
y_max = 1e5
"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cble-lab"))
        .args(args)
        .env_remove("CBLE_SEED")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn classify_heavy_index() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "m.toml",
        "[model]\ny0 = 1.0\n[model.branching]\nmu = { kind = \"pure_stable\", a_bar = 1.0, alpha = 1.2 }\n",
    );
    let o = run(&["classify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("NonExplosive (Corollary 3.3)"), "{}", stdout(&o));
}

#[test]
fn verify_identities_passes() {
    let o = run(&["verify-identities"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
}

#[test]
fn negative_start_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "m.toml", &STABLE.replace("y0 = 10.0", "y0 = -1.0"));
    let out = dir.path().join("out");
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("y0"), "{}", stderr(&o));
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "m.toml", &STABLE.replace("seed = 7", "seed = 7\nsead = 8"));
    let o = run(&["classify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sead"), "{}", stderr(&o));
}

#[test]
fn divergent_generator_is_a_numerical_failure() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "m.toml", STABLE);
    let o = run(&[
        "generator", "--config", cfg.to_str().unwrap(), "--family", "linear", "--y-grid", "1,10",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
}

#[test]
fn missing_config_is_an_io_error() {
    let o = run(&["classify", "--config", "/nonexistent/cble.toml"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn generator_csv_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "m.toml", STABLE);
    let args = |out: &str| {
        vec![
            "generator".to_string(),
            "--config".into(),
            cfg.to_str().unwrap().into(),
            "--family".into(),
            "exp-inverse-power".into(),
            "--params".into(),
            "delta=0.1".into(),
            "--y-grid".into(),
            "0.1:1000:25".into(),
            "--out".into(),
            dir.path().join(out).to_str().unwrap().into(),
        ]
    };
    for out in ["a.csv", "b.csv"] {
        let a = args(out);
        let o = run(&a.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.csv")).unwrap());
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_SCHEMA_HEADER));
    assert_eq!(lines.next(), Some("y,Lg"));
    assert_eq!(lines.count(), 25);
}

#[test]
fn simulate_outputs_reparse_and_repeat() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "m.toml", STABLE);
    let outs = ["r1", "r2"].map(|d| dir.path().join(d));
    for out in &outs {
        let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--paths", "6", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for name in ["path_00000.csv", "path_00005.csv", "summary.json"] {
        assert_eq!(fs::read(outs[0].join(name)).unwrap(), fs::read(outs[1].join(name)).unwrap(), "{name}");
    }
    let summary: SimulationSummary =
        serde_json::from_str(&fs::read_to_string(outs[0].join("summary.json")).unwrap()).unwrap();
    validate_model(summary.config.model.clone()).unwrap();
    assert_eq!(summary.result.n_paths, 6);
    assert_eq!(summary.paths.len(), 6);
    for i in 0..6 {
        let p: PathRecord =
            serde_json::from_str(&fs::read_to_string(outs[0].join(format!("path_{i:05}.json"))).unwrap()).unwrap();
        p.check(summary.result.config_echo.k_explode).unwrap();
        assert_eq!(p.exploded, summary.paths[i].exploded);
    }
    let csv = fs::read_to_string(outs[0].join("path_00000.csv")).unwrap();
    assert!(csv.starts_with(CSV_SCHEMA_HEADER));
}

#[test]
fn seed_override_changes_paths() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "m.toml", STABLE);
    let run_with = |seed: &str, out: &str| {
        let out = dir.path().join(out);
        let o = Command::new(env!("CARGO_BIN_EXE_cble-lab"))
            .args(["simulate", "--config", cfg.to_str().unwrap(), "--paths", "2", "--out", out.to_str().unwrap()])
            .env("CBLE_SEED", seed)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        let s: SimulationSummary = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
        (s.result.config_echo.seed, fs::read(out.join("path_00000.csv")).unwrap())
    };
    let (s1, a) = run_with("11", "a");
    let (s2, b) = run_with("12", "b");
    assert_eq!((s1, s2), (11, 12));
    assert_ne!(a, b);
}

#[test]
fn scan_json_reparses() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "m.toml", STABLE);
    let out = dir.path().join("scan.json");
    let o = run(&["lyapunov", "scan-explosion", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["found"], true);
    assert_eq!(v["replay_ok"], true);
    let cert: ExplosionCertificate = serde_json::from_value(v["certificate"].clone()).unwrap();
    assert!(cert.margin >= 0.0 && cert.y_bar < 1e5);

    let o = run(&["lyapunov", "scan-nonexplosion", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["found"], false);
}

#[test]
fn phase_outputs_reparse() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "m.toml", STABLE);
    let out = dir.path().join("phase");
    let o = run(&[
        "phase", "--config", cfg.to_str().unwrap(), "--axis1", "b0=0,8", "--axis2", "q0=1.2,1.5",
        "--n-per-cell", "4", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let d: PhaseDiagram = serde_json::from_str(&fs::read_to_string(out.join("phase.json")).unwrap()).unwrap();
    assert_eq!(d.cells.len(), 4);
    let csv = fs::read_to_string(out.join("phase.csv")).unwrap();
    assert_eq!(csv, d.to_csv());
    assert_eq!(csv.lines().count(), 2 + 4);
}
