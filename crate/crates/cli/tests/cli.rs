use std::path::Path;
use std::process::{Command, Output};

fn rydex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rydex"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a CSV, comments and header removed.
fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn default_config() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs/cs133_default.json")
        .display()
        .to_string()
}

#[test]
fn sensitivity_at_room_temperature() {
    let cfg = default_config();
    let out = stdout(&rydex(&["sensitivity", "--temp", "300", "--config", &cfg]));
    let r = rows(&out);
    let v_per_m: f64 = r[0][3].parse().unwrap();
    let pv_per_cm: f64 = r[0][4].parse().unwrap();
    assert!((pv_per_cm / 838.0 - 1.0).abs() < 0.01, "{pv_per_cm}");
    assert!((v_per_m / 8.38e-8 - 1.0).abs() < 0.01);
}

#[test]
fn zeta_short_cell_limit() {
    let r = rows(&stdout(&rydex(&["zeta", "--ell", "1e-4"])));
    let z: f64 = r[0][1].parse().unwrap();
    assert!(z > 0.9999 && z <= 1.0);
}

#[test]
fn tf_grid_contract() {
    let out = stdout(&rydex(&["tf", "--fmin", "1e2", "--fmax", "1e7", "--points", "512"]));
    let f: Vec<f64> = rows(&out).iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(f.len(), 512);
    assert!(f.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(f[0], 1e2);
    assert_eq!(f[511], 1e7);
    assert!(out.starts_with("# manifest_sha256="));
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let text = std::fs::read_to_string(default_config())
        .unwrap()
        .replacen("\"gamma_hz\"", "\"gamma_khz\"", 1);
    std::fs::write(&path, text).unwrap();
    let o = rydex(&["--config", path.to_str().unwrap(), "zeta"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma_khz"));
}

#[test]
fn invalid_value_names_key_and_unit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let text = std::fs::read_to_string(default_config())
        .unwrap()
        .replacen("\"distance_m\": 200.0", "\"distance_m\": -1.0", 1);
    std::fs::write(&path, text).unwrap();
    let o = rydex(&["--config", path.to_str().unwrap(), "noise"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("link.distance_m") && err.contains("[m]"), "{err}");
}

#[test]
fn numeric_failure_exits_3() {
    // Too short to reach 90% of the step response.
    let o = rydex(&["impulse", "--n", "10"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn out_dir_is_reproducible_and_snapshot_round_trips() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = rydex(&["nf-sweep", "--points", "20", "--out", d.path().to_str().unwrap()]);
        assert!(o.status.success());
    }
    let read = |d: &tempfile::TempDir, f: &str| std::fs::read(d.path().join(f)).unwrap();
    assert_eq!(read(&a, "nf_sweep.csv"), read(&b, "nf_sweep.csv"));
    assert_eq!(read(&a, "nf_sweep.json"), read(&b, "nf_sweep.json"));

    let manifest: serde_json::Value =
        serde_json::from_slice(&read(&a, "nf_sweep.manifest.json")).unwrap();
    let hash = manifest["hash"].as_str().unwrap();
    let csv = String::from_utf8(read(&a, "nf_sweep.csv")).unwrap();
    assert!(csv.contains(hash));
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 3);

    // Rerunning from the snapshot reproduces the data.
    let snap = a.path().join("nf_sweep.config.json");
    let again = stdout(&rydex(&["nf-sweep", "--points", "20", "--config", snap.to_str().unwrap()]));
    assert_eq!(rows(&again), rows(&csv));
}

#[test]
fn json_output_embeds_config() {
    let out = stdout(&rydex(&["--format", "json", "--temp", "77", "sensitivity"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["config"]["atomic"]["temperature_k"], 77.0);
    assert!(v["tables"]["sensitivity"]["zeta"].is_array());
    assert!(v["manifest_sha256"].as_str().unwrap().len() == 64);
}

#[test]
fn light_subcommands_succeed() {
    for args in [
        vec!["steady"],
        vec!["dcsweep", "--points", "11"],
        vec!["gq", "--points", "16"],
        vec!["pz"],
        vec!["doppler-tf", "--method", "analytic", "--points", "4"],
        vec!["noise"],
        vec!["mimo-capacity", "--trials", "4", "--pmin", "-10", "--pmax", "0"],
    ] {
        let o = rydex(&args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn simulate_sc_writes_constellation_first() {
    let out = stdout(&rydex(&["simulate-sc", "--no-noise"]));
    let header = out.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "sym_index,tx_re,tx_im,rx_re,rx_im");
    assert_eq!(rows(&out).len(), 256);
}
