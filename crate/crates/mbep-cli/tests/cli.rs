//! End-to-end checks of the command-line surface: determinism, exit codes,
//! and output shapes.

use std::path::PathBuf;
use std::process::Command;

fn mbep() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mbep"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mbep-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn identical_config_gives_byte_identical_output() {
    let d1 = tmp_dir("det1");
    let d2 = tmp_dir("det2");
    for dir in [&d1, &d2] {
        let status = mbep()
            .args([
                "jordan",
                "--preset",
                "qutrit_i",
                "--param",
                "gamma_h=0.4",
                "--param",
                "gamma_e=0.2",
                "--out",
            ])
            .arg(dir)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(d1.join("jordan.json")).unwrap();
    let b = std::fs::read(d2.join("jordan.json")).unwrap();
    assert_eq!(a, b, "outputs differ between identical runs");
}

#[test]
fn config_errors_exit_2() {
    let status = mbep().args(["spectrum", "--preset", "unknown_model"]).status().unwrap();
    assert_eq!(status.code(), Some(2));

    // No model at all.
    let status = mbep().args(["spectrum"]).status().unwrap();
    assert_eq!(status.code(), Some(2));

    // Malformed config file.
    let dir = tmp_dir("badcfg");
    let cfg = dir.join("bad.json");
    std::fs::write(&cfg, "{ not json").unwrap();
    let status = mbep()
        .args(["spectrum", "--config"])
        .arg(&cfg)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn numeric_errors_exit_3() {
    // Extreme norm overflows the matrix exponential; reported, not saturated.
    let dir = tmp_dir("overflow");
    let status = mbep()
        .args([
            "evolve",
            "--preset",
            "qubit_i",
            "--param",
            "gamma_i=1e9",
            "--param",
            "gamma_e=2e9",
            "--param",
            "omega=0.1",
            "--raw-time",
            "--tau-max",
            "1e6",
            "--points",
            "4",
            "--out",
        ])
        .arg(&dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn config_file_round_trip() {
    let dir = tmp_dir("cfg");
    let cfg = dir.join("run.json");
    std::fs::write(
        &cfg,
        r#"{
  "model": {
    "n_levels": 3,
    "detunings": [0.0, 0.0],
    "drives": [{"i": 2, "j": 3, "omega": 0.175}],
    "sink_rates": [0.2, 0.9],
    "intra_jumps": []
  }
}"#,
    )
    .unwrap();
    let status = mbep()
        .args(["spectrum", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(dir.join("spectrum.csv")).unwrap();
    assert!(csv.starts_with("matrix,index,re,im\n"));
    // 3x3 hamiltonian + 2x2 h_eff + 4 + 4 + 9 eigenvalue rows.
    assert_eq!(csv.lines().count(), 1 + 3 + 2 + 4 + 4 + 9);
}

#[test]
fn evolve_csv_has_population_and_prefactor_columns() {
    let dir = tmp_dir("evolve");
    let status = mbep()
        .args([
            "evolve",
            "--preset",
            "qubit_ii",
            "--param",
            "gamma_i=0.2",
            "--param",
            "gamma_e=0.9",
            "--param",
            "big_gamma=0.3",
            "--points",
            "16",
            "--tau-max",
            "6",
            "--out",
        ])
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(dir.join("evolve.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "tau,rho_2,rho_3,prefactor_2,prefactor_3");
    assert_eq!(lines.count(), 16);
}

#[test]
fn verify_subset_runs_fast_and_passes() {
    let output = mbep().args(["verify", "--criteria", "1,12"]).output().unwrap();
    assert!(output.status.success());
    let text = String::from_utf8_lossy(&output.stdout);
    assert!(text.contains("criterion  1 [PASS]"));
    assert!(text.contains("criterion 12 [PASS]"));
}
