use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lzs_core::{lzs_rate, stationary_eq7, DriveParams, RateKernelParams};

const THREE_STATE: &str = r#"
[model]
left_offsets = [0.0]
right_offsets = [0.0, 6.0]
crossings = [[0.01, 0.2]]

[[model.relax]]
from = "1R"
to = "0R"
rate = 0.5

[[model.relax]]
from = "0L"
to = "0R"
rate = 1e-4

[drive]
frequency = 1.0
dephasing = 0.05

[grid]
eps_min = -1.0
eps_max = 7.0
n_eps = 33
amp_min = 0.0
amp_max = 8.0
n_amp = 17

[output]
formats = ["csv", "pgm"]
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lzs-sim"))
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

fn ok(out: Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn run_writes_maps_and_manifest_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), THREE_STATE);
    for (name, workers) in [("a", "1"), ("b", "3")] {
        let out = dir.path().join(name);
        ok(bin()
            .args(["run", cfg.to_str().unwrap(), "--workers", workers, "--out"])
            .arg(&out)
            .output()
            .unwrap());
    }
    for file in ["map_00.csv", "map_00.pgm", "manifest.json"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file}");
    }

    let pgm = fs::read(dir.path().join("a/map_00.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n33 17\n255\n"));
    assert_eq!(pgm.len(), b"P5\n33 17\n255\n".len() + 33 * 17);

    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("a/manifest.json")).unwrap()).unwrap();
    let csv = fs::read(dir.path().join("a/map_00.csv")).unwrap();
    let files = &manifest["maps"][0]["files"];
    assert_eq!(files[0]["path"], "map_00.csv");
    assert_eq!(files[0]["sha256"], lzs_sim::output::sha256_hex(&csv));
    assert_eq!(manifest["diamond_boundaries"].as_array().unwrap().len(), 2);
    // one left level: no regime classification
    assert!(manifest["maps"][0]["regime"].is_null());
    assert!(fs::read_dir(dir.path().join("a")).unwrap().all(|e| !e
        .unwrap()
        .path()
        .to_string_lossy()
        .ends_with(".tmp")));
}

#[test]
fn probe_matches_the_three_state_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), THREE_STATE);
    let (eps, amp) = (3.0, 3.5);
    let text = ok(bin()
        .args(["probe", cfg.to_str().unwrap(), "--eps", "3", "--amp", "3.5"])
        .output()
        .unwrap());
    let value = |label: &str| -> f64 {
        let line = text.lines().find(|l| l.split('\t').next() == Some(label)).unwrap();
        line.split('\t').nth(1).unwrap().parse().unwrap()
    };

    let d = DriveParams::new(amp, 1.0, 0.05).unwrap();
    let k = RateKernelParams::default();
    let wa = lzs_rate(0.01, eps, &d, &k);
    let wb = lzs_rate(0.2, eps - 6.0, &d, &k);
    let (p0r, p0l, p1r) = stationary_eq7(wa, wb, 0.5, 1e-4).unwrap();
    // printed with 13 significant digits
    for (label, expected) in [("0R", p0r), ("0L", p0l), ("1R", p1r), ("P_L", p0l)] {
        assert!((value(label) - expected).abs() < 1e-11 * expected.max(1e-3), "{label}");
    }
}

#[test]
fn probe_accepts_negative_detuning_and_drive_index() {
    let dir = tempfile::tempdir().unwrap();
    let text = THREE_STATE.replace("frequency = 1.0", "frequencies = [1.0, 2.0]");
    let cfg = write_config(dir.path(), &text);
    let out = ok(bin()
        .args([
            "probe",
            cfg.to_str().unwrap(),
            "--eps",
            "-0.5",
            "--amp",
            "1",
            "--drive",
            "1",
        ])
        .output()
        .unwrap());
    assert!(out.contains("P_L\t") && out.contains("P_R\t"));
    let bad = bin()
        .args([
            "probe",
            cfg.to_str().unwrap(),
            "--eps",
            "0",
            "--amp",
            "1",
            "--drive",
            "2",
        ])
        .output()
        .unwrap();
    assert!(!bad.status.success());
}

#[test]
fn boundaries_reports_geometry_and_regimes() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/frequency_batch.toml");
    let text = ok(bin().arg("boundaries").arg(&path).output().unwrap());
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["diamond_boundaries"].as_array().unwrap().len(), 100);
    let regimes = v["regimes"].as_array().unwrap();
    assert_eq!(regimes.len(), 6);
    assert_eq!(regimes[0]["frequency_ghz"], 5.0);
    assert!(regimes.iter().all(|r| r["regime"]["regime"].is_string()));
}

#[test]
fn invalid_configs_fail_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &THREE_STATE.replace("dephasing = 0.05", "dephasing = -1.0"));
    let out = bin().args(["run", cfg.to_str().unwrap()]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("dephasing must be positive"));

    let cfg = write_config(dir.path(), &THREE_STATE.replace("[grid]", "[grid]\nstep = 1"));
    let out = bin().args(["boundaries", cfg.to_str().unwrap()]).output().unwrap();
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(!out.status.success());
    assert!(err.contains("line 22") && err.contains("step"), "{err}");

    let out = bin().args(["run", "/nonexistent/config.toml"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            lzs_sim::load_config(&path).unwrap_or_else(|e| panic!("{}: {e:#}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 5);
}
