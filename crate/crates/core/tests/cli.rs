use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn jrcsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jrcsim"))
        .args(args)
        .output()
        .expect("spawn jrcsim")
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn resolved(dir: &Path) -> toml::Table {
    manifest(dir)["config_toml"].as_str().unwrap().parse().unwrap()
}

#[test]
fn simulate_writes_record_and_manifest() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().to_str().unwrap();
    let o = jrcsim(&["simulate", "--dump", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["trial.json", "frame.csv", "samples.csv", "samples.bin", "freq_grid.csv", "manifest.json"] {
        assert!(tmp.path().join(f).exists(), "{f} missing");
    }
    let m = manifest(tmp.path());
    assert_eq!(m["subcommand"], "simulate");
    assert_eq!(m["master_seed"], 1);
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    let trial: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("trial.json")).unwrap()).unwrap();
    assert!(trial["record"]["t_stat"].is_number());
}

#[test]
fn flags_override_set_which_overrides_file() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "[run]\nseed = 5\nworkers = 3\n[scenario]\nsnr_db = 20.0\nr0_m = 50.0\n").unwrap();
    let out = tmp.path().join("o");
    let o = jrcsim(&[
        "rdmap",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "run.seed=6",
        "--set",
        "scenario.snr_db=7",
        "--seed",
        "9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = resolved(&out);
    assert_eq!(t["run"]["seed"].as_integer(), Some(9));
    assert_eq!(t["run"]["workers"].as_integer(), Some(3));
    assert_eq!(t["scenario"]["snr_db"].as_float(), Some(7.0));
    assert_eq!(t["scenario"]["r0_m"].as_float(), Some(50.0));
    assert!(out.join("rdmap.csv").exists() && out.join("peaks.json").exists());
}

#[test]
fn roc_rerun_from_manifest_is_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let o = jrcsim(&[
        "roc",
        "--set",
        "montecarlo.n_trials=40",
        "--set",
        "montecarlo.gamma_count=11",
        "--workers",
        "2",
        "--out",
        a.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = jrcsim(&[
        "roc",
        "--config",
        a.join("manifest.json").to_str().unwrap(),
        "--workers",
        "5",
        "--out",
        b.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(a.join("roc.csv")).unwrap(), fs::read(b.join("roc.csv")).unwrap());
    assert_eq!(manifest(&a)["config_hash"], manifest(&b)["config_hash"]);
}

#[test]
fn plot_renders_svg() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().to_str().unwrap();
    assert!(jrcsim(&["roc", "--set", "montecarlo.n_trials=20", "--out", out]).status.success());
    let csv = tmp.path().join("roc.csv");
    let o = jrcsim(&["plot", csv.to_str().unwrap(), "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let svg = fs::read_to_string(tmp.path().join("roc.svg")).unwrap();
    assert_eq!(svg.matches("<polyline class=\"roc\"").count(), 4);
}

#[test]
fn usage_and_config_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().to_str().unwrap();
    let empty = tmp.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["frobnicate"],
        vec!["simulate", "--config", "/nonexistent/run.toml"],
        vec!["simulate", "--set", "scenario.kind=real", "--set", "scenario.f_cfo_hz=1"],
        vec!["roc", "--set", "montecarlo.n_trials=0"],
        vec!["simulate", "--set", "ofdm.no_such_key=1"],
        vec!["simulate", "--set", "missing_equals"],
        vec!["plot", empty.to_str().unwrap()],
        vec!["plot", "/nonexistent/roc.csv"],
    ];
    for mut args in cases {
        args.extend(["--out", out]);
        let o = jrcsim(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn help_and_version_succeed() {
    assert!(jrcsim(&["--help"]).status.success());
    let v = jrcsim(&["--version"]);
    assert!(v.status.success());
    assert!(String::from_utf8_lossy(&v.stdout).contains(env!("CARGO_PKG_VERSION")));
}
