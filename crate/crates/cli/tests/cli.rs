use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn smectic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smectic")).args(args).output().expect("spawn smectic")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

fn write_zero_field(dir: &Path, n1: usize, n2: usize) -> std::path::PathBuf {
    let header = dir.join("zero.field");
    std::fs::write(
        &header,
        format!(r#"{{"n1": {n1}, "n2": {n2}, "layout": "row-major-x1-fastest", "dtype": "f64-le", "data": "zero.bin"}}"#),
    )
    .unwrap();
    std::fs::write(dir.join("zero.bin"), vec![0u8; 8 * n1 * n2]).unwrap();
    header
}

#[test]
fn verify_passes_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = smectic(&["verify", "--grid", "64x64", "--seed", "7", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("records.csv")).unwrap();
    let names: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    for n in ["parseval", "adjoint_d1", "hkm2", "div_sigma", "gradient_check"] {
        assert!(names.iter().any(|x| x.starts_with(n)), "missing {n} in {names:?}");
    }
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["grid"], "64x64");
    assert_eq!(manifest["config"]["seed"], 7);
    assert_eq!(manifest["exit_code"], 0);
    assert!(manifest["versions"]["smectic_core"].is_string());
    assert!(manifest["wall_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn sweep_jump_cost_column_is_one_sixth() {
    let dir = tempfile::tempdir().unwrap();
    let o = smectic(&["sweep", "--c", "0.5", "--eps", "2^-4..2^-6", "--grid", "256x8", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("eps,delta_star,energy_eps,jump_cost,gap"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3);
    for (r, eps) in rows.iter().zip([1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0]) {
        assert_eq!(r[0], eps);
        assert!((r[3] - 1.0 / 6.0).abs() <= 1e-10, "jump_cost {}", r[3]);
        assert!((r[4] - (r[2] - r[3])).abs() <= 1e-12);
    }
}

#[test]
fn energy_of_zero_field_vanishes() {
    let dir = tempfile::tempdir().unwrap();
    let field = write_zero_field(dir.path(), 32, 16);
    let out = dir.path().join("out");
    let o = smectic(&["energy", "--field", field.to_str().unwrap(), "--eps", "0.1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("energy.json")).unwrap()).unwrap();
    let r = &report[0];
    assert_eq!(r["eps"], 0.1);
    for k in ["compression", "bending", "energy_eps", "energy_indep"] {
        assert_eq!(r[k].as_f64(), Some(0.0), "{k}");
    }
}

#[test]
fn usage_and_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    assert_eq!(smectic(&["verify", "--grid", "63x64", "--out", &out]).status.code(), Some(2));
    assert_eq!(smectic(&["verify", "--grid", "banana", "--out", &out]).status.code(), Some(2));
    assert_eq!(smectic(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(smectic(&["--out", &out]).status.code(), Some(2));
    assert_eq!(smectic(&["sweep", "--eps", "0.1..0.03", "--out", &out]).status.code(), Some(2));
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"command": "verify", "gird": "64x64"}"#).unwrap();
    assert_eq!(smectic(&["--config", cfg.to_str().unwrap(), "--out", &out]).status.code(), Some(2));
}

#[test]
fn non_admissible_field_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let header = dir.path().join("ones.field");
    std::fs::write(&header, r#"{"n1": 8, "n2": 8, "layout": "row-major-x1-fastest", "dtype": "f64-le"}"#).unwrap();
    std::fs::write(dir.path().join("ones.bin"), 1.0f64.to_le_bytes().repeat(64)).unwrap();
    let out = dir.path().join("out");
    let o = smectic(&["energy", "--field", header.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["exit_code"], 2);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"command": "tail", "grid": "32x32", "seed": 1, "kmax": 6, "format": "json"}"#).unwrap();
    let out = dir.path().join("out");
    let o = smectic(&["--config", cfg.to_str().unwrap(), "--seed", "4", "--eps", "0.25", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: Value = serde_json::from_str(&std::fs::read_to_string(out.join("tail.json")).unwrap()).unwrap();
    let tails: Vec<f64> = rows.as_array().unwrap().iter().map(|r| r["tail_mass"].as_f64().unwrap()).collect();
    assert_eq!(tails.len(), 4);
    assert!(tails[0] > 0.0 && tails[1..].iter().all(|&t| t == 0.0), "{tails:?}");
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["seed"], 4);
}

#[test]
fn minimize_writes_field_and_lowers_energy() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = smectic(&[
        "minimize", "--grid", "32x32", "--seed", "3", "--kmax", "4", "--eps", "0.0625", "--max-iters", "50", "--anchor", "pinned:8",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let hist: Vec<f64> = report["energy_history"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!(hist.last().unwrap() < hist.first().unwrap());
    assert!(hist.windows(2).all(|w| w[1] <= w[0]));
    assert!(out.join("minimizer.field").exists() && out.join("minimizer.bin").exists());
    let again = dir.path().join("again");
    let o = smectic(&["energy", "--field", out.join("minimizer.field").to_str().unwrap(), "--eps", "0.0625", "--out", again.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let e: Value = serde_json::from_str(&std::fs::read_to_string(again.join("energy.json")).unwrap()).unwrap();
    let reread = e[0]["energy_eps"].as_f64().unwrap();
    let reported = report["final_energy"]["energy_eps"].as_f64().unwrap();
    assert!((reread - reported).abs() <= 1e-12 * reported.max(1.0), "{reread} vs {reported}");
}

#[test]
fn besov_and_entropy_commands_pass() {
    let dir = tempfile::tempdir().unwrap();
    let b = dir.path().join("b");
    let o = smectic(&["besov", "--grid", "256x256", "--seed", "2", "--p", "3", "--s", "0.5", "--eps", "0.1", "--out", b.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(b.join("records.csv")).unwrap();
    for n in ["l3,", "b2s,", "avebd,", "hkm1", "fractional_parseval,", "lp,", "lp_eps,"] {
        assert!(csv.contains(n), "missing {n}");
    }
    let e = dir.path().join("e");
    let o = smectic(&["entropy", "--grid", "256x8", "--c", "0.5", "--delta", "0.05", "--eps", "0.03125", "--out", e.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(e.join("records.csv")).unwrap();
    assert!(csv.contains("jump_cost_measure,") && csv.contains("div_sigma,") && csv.contains("duality,") && csv.contains("entropy_production,"));
}

#[test]
fn rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = smectic(&["verify", "--grid", "32x32", "--seed", "11", "--seeds", "3", "--format", "json", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        std::fs::read(out.join("records.json")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}
