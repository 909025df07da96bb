use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn eitlab(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eitlab"))
        .args(args)
        .env("EITLAB_OUTPUT_DIR", out_dir)
        .output()
        .expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn golden(name: &str) -> String {
    fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).unwrap()
}

fn write_cfg(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("test.cfg");
    fs::write(&p, body).unwrap();
    p
}

const SMALL: &str = "gamma_mhz = 6.7\ncontrol_powers_mw = 3.8\nstorage_time_us = 400\nwalkers = 2000\n";

#[test]
fn validate_reference_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("reference.cfg");
    let out = eitlab(&["validate", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}

#[test]
fn validate_reports_named_violations() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), &format!("{SMALL}densities = 1e11, -3e11\ncontrol_pwr = 2\n"));
    let out = eitlab(&["validate", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("densities"), "{err}");
    assert!(err.contains("unknown key `control_pwr`"), "{err}");
}

#[test]
fn missing_file_has_its_own_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let out = eitlab(&["validate", "/nonexistent/x.cfg"], tmp.path());
    assert_eq!(out.status.code(), Some(4));
    let out = eitlab(&["sweep", "/nonexistent/x.cfg"], tmp.path());
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn runtime_and_argument_errors() {
    let tmp = tempfile::tempdir().unwrap();
    // nothing can be stored in an empty medium
    let out = eitlab(&["optimize", "--d", "0"], tmp.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let out = eitlab(&["slow", "--d", "5", "--omega", "-1"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn empty_density_list_gives_header_only() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), &format!("{SMALL}densities =\n"));
    let out = eitlab(&["sweep", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read_to_string(tmp.path().join("sweep.csv")).unwrap(), golden("sweep_header.csv"));
}

#[test]
fn sweep_is_byte_identical_across_runs_and_jobs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        tmp.path(),
        "gamma_mhz = 6.7\ncontrol_powers_mw = 3.8, 8.8\ndensities = 1e11, 2e11\nstorage_time_us = 400\n",
    );
    let mut outputs = Vec::new();
    for (k, jobs) in ["1", "3", "3"].iter().enumerate() {
        let dir = tmp.path().join(format!("run{k}"));
        let out = eitlab(&["sweep", cfg.to_str().unwrap(), "--jobs", jobs], &dir);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(fs::read(dir.join("sweep.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
    let text = String::from_utf8(outputs[0].clone()).unwrap();
    assert!(text.starts_with(&golden("sweep_header.csv")));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn json_summary_echoes_config_and_seed_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), &format!("{SMALL}densities = 1e11, 4e11\n"));
    let out = eitlab(&["radtrap", cfg.to_str().unwrap(), "--seed", "99"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("radtrap.csv")).unwrap();
    assert!(csv.starts_with(&golden("radtrap_header.csv")));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("radtrap.json")).unwrap()).unwrap();
    assert_eq!(json["seed"], 99);
    assert_eq!(json["config"]["seed"], "99");
    assert_eq!(json["config"]["densities"], "100000000000, 400000000000");
    assert!(json["version"].as_str().unwrap().starts_with("v0.1.0"));
    assert_eq!(json["rows"], 2);
}

#[test]
fn geometry_compare_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), &format!("{SMALL}densities = 1e11, 4e11\n"));
    let out = eitlab(&["geometry-compare", cfg.to_str().unwrap(), "--jobs", "2"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("geometry.csv")).unwrap();
    assert!(csv.starts_with(&golden("geometry_header.csv")));
    let cells: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(cells, ["baseline", "elongated", "elongated_quenched"]);
}

#[test]
fn single_run_commands_print_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = eitlab(&["eit-scan", "--d", "20", "--points", "101"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("delta2,transmission\n"));
    assert_eq!(stdout.lines().count(), 102);
    assert!(String::from_utf8_lossy(&out.stderr).contains("fwhm = "));

    let out = eitlab(&["store", "--d", "10", "--storage", "30"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("eta_total = "));

    let path = tmp.path().join("slow.csv");
    let out = eitlab(&["slow", "--d", "10", "--out", path.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(fs::read_to_string(path).unwrap().starts_with("t,input,output\n"));
}
