//! End-to-end tests of the command-line interface: exit codes, file
//! emission, determinism of the emitted tables, and the shipped baseline
//! scenario.

mod common;

use satcoop::scenario;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

const SMALL_SCENARIO: &str = r#"
[constellation]
[[constellation.shell]]
altitude_km = 550.0
inclination_deg = 53.0
num_planes = 22
sats_per_plane = 72
phasing_step_deg = 1.1364
[[constellation.shell]]
altitude_km = 540.0
inclination_deg = 53.2
num_planes = 22
sats_per_plane = 72
phasing_step_deg = 1.1364

[user]
latitude_deg = 51.4880572
longitude_deg = -0.0762838

[link]
power_dbw = -2.0
tx_gain_db = 5.0
rx_gain_db = 35.0
carrier_ghz = 6.0
bandwidth_mhz = 500.0

[channel]
moment_samples = 10000

[experiment]
duration_s = 20.0
time_step_s = 10.0
l_values = [1, 12]
mc_symbols = 10000
ber_time_samples = 2
ber_blocks_per_sample = 2
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_satcoop"))
}

fn write_scenario(dir: &Path) -> PathBuf {
    let path = dir.join("scenario.toml");
    fs::write(&path, SMALL_SCENARIO).unwrap();
    path
}

#[test]
fn visibility_run_emits_table_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_scenario(dir.path());
    let out = dir.path().join("out");
    let status = bin()
        .args(["visibility", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = fs::read_to_string(out.join("visibility.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "time_s,visible_count,nearest_sat_id,nearest_range_m,nearest_elevation_deg"
    );
    assert_eq!(lines.count(), 2); // duration 20 s at 10 s steps

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("visibility.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["seed"], 42);
    assert_eq!(manifest["subcommand"], "visibility");
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["metrics"]["min_visible"].as_u64().unwrap() > 0);
}

#[test]
fn runs_are_byte_identical_across_reruns_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_scenario(dir.path());
    let mut outputs = Vec::new();
    for (sub, threads) in [("out_a", "1"), ("out_b", "4"), ("out_c", "2")] {
        let out = dir.path().join(sub);
        let status = bin()
            .args(["capacity-timeseries", "--format", "csv+json", "--threads", threads])
            .arg("--config")
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push((
            fs::read(out.join("capacity-timeseries.csv")).unwrap(),
            fs::read(out.join("capacity-timeseries.json")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn seed_override_changes_results_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_scenario(dir.path());
    let run = |seed: &str, out: &str| {
        let out = dir.path().join(out);
        let status = bin()
            .args(["ber-vs-l", "--seed", seed])
            .arg("--config")
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        fs::read(out.join("ber-vs-l.csv")).unwrap()
    };
    let a = run("7", "o1");
    let b = run("7", "o2");
    let c = run("8", "o3");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    // Semantic error.
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, SMALL_SCENARIO.replace("bandwidth_mhz = 500.0", "bandwidth_mhz = -1.0"))
        .unwrap();
    let output = bin()
        .args(["visibility", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("[link].bandwidth_mhz"), "{stderr}");

    // Unknown key.
    let unknown = dir.path().join("unknown.toml");
    fs::write(&unknown, format!("{SMALL_SCENARIO}\n[extras]\nfoo = 1\n")).unwrap();
    let output = bin()
        .args(["visibility", "--config"])
        .arg(&unknown)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));

    // Missing file.
    let output = bin()
        .args(["visibility", "--config", "/nonexistent/scenario.toml"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_scenario(dir.path());
    // Output "directory" is an existing file: create_dir_all fails.
    let blocked = dir.path().join("blocked");
    fs::write(&blocked, "not a directory").unwrap();
    let output = bin()
        .args(["visibility", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(blocked.join("sub"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn overhead_rows_per_mode() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_scenario(dir.path());
    let out = dir.path().join("out");
    let status = bin()
        .args(["overhead", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = fs::read_to_string(out.join("overhead.csv")).unwrap();
    assert!(csv.contains("FULL_CSI,12,12,12"));
    assert!(csv.contains("PARTIAL_CSI,12,12,0"));
    assert!(csv.contains("SINGLE_SAT,12,0,0"));
}

#[test]
fn shipped_baseline_scenario_matches_reference_parameters() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/paper-baseline.toml");
    let (cfg, _) = scenario::validate_config(&path).unwrap();
    assert_eq!(cfg.link.f_c_hz, 6e9);
    assert_eq!(cfg.link.bw_hz, 500e6);
    assert_eq!(cfg.link.p_t_dbw, -2.0);
    assert_eq!(cfg.link.g_t_db, 5.0);
    assert_eq!(cfg.link.g_r_db, 35.0);
    assert_eq!(cfg.epsilon, 3.0);
    assert_eq!(cfg.user.latitude_deg, 51.488_057_2);
    assert_eq!(cfg.user.longitude_deg, -0.076_283_8);
    assert_eq!(cfg.min_elevation_deg, 30.0);
    let total: usize = cfg.constellation.shells.iter().map(|s| s.count()).sum();
    assert_eq!(total, 3168);
    // It is exactly the built-in baseline.
    assert_eq!(cfg, satcoop::experiments::ScenarioConfig::paper_baseline());
}

#[test]
fn json_mirror_matches_csv_numerals() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_scenario(dir.path());
    let out = dir.path().join("out");
    let status = bin()
        .args(["band-sweep", "--format", "csv+json", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = fs::read_to_string(out.join("band-sweep.csv")).unwrap();
    let json = fs::read_to_string(out.join("band-sweep.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
    // Every numeral in the CSV body appears verbatim in the JSON text.
    for line in csv.lines().skip(1) {
        for field in line.split(',') {
            assert!(json.contains(field), "field {field} missing from JSON");
        }
    }
    assert_eq!(
        parsed["rows"].as_array().unwrap().len(),
        csv.lines().count() - 1
    );
}
