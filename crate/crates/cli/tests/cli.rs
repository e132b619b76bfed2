//! End-to-end checks of the binary: output contracts, exit codes, and
//! byte-level determinism.

use std::process::{Command, Output};

fn pdspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdspec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

#[test]
fn seq_prints_the_fixed_point_prefix() {
    let out = pdspec(&["seq", "--start", "0", "--len", "8"]);
    assert!(out.status.success());
    assert_eq!(stdout_str(&out).trim(), "abaaabab");
}

#[test]
fn seq_two_sided_window_and_shift() {
    let out = pdspec(&["seq", "--start", "-4", "--len", "4"]);
    assert_eq!(stdout_str(&out).trim(), "abaa");
    let out = pdspec(&["seq", "--start", "0", "--len", "4", "--shift", "1"]);
    assert_eq!(stdout_str(&out).trim(), "baaa");
}

#[test]
fn seq_json_has_partition_labels() {
    let out = pdspec(&[
        "seq",
        "--start",
        "0",
        "--len",
        "8",
        "--partition",
        "1",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(stdout_str(&out).trim()).unwrap();
    assert_eq!(v["letters"], "abaaabab");
    let labels: Vec<&str> = v["partition"]
        .as_array()
        .unwrap()
        .iter()
        .map(|b| b["label"].as_str().unwrap())
        .collect();
    assert_eq!(labels, vec!["a1", "b1", "a1", "a1"]);
}

#[test]
fn traces_csv_layout_and_values() {
    let out = pdspec(&["traces", "--energy", "0", "--nmax", "2"]);
    let text = stdout_str(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,x_n,y_n,scale_log"));
    let row0: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row0[0], "0");
    assert_eq!(row0[1].parse::<f64>().unwrap(), 4.0);
    let row1: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row1[1].parse::<f64>().unwrap(), -6.0);
    let y1: f64 = row1[2].parse().unwrap();
    assert!((y1 - 14.0).abs() < 1e-9);
}

#[test]
fn traces_escape_truncates_rows_and_notes_it() {
    let out = pdspec(&["traces", "--energy", "10", "--nmax", "30"]);
    assert!(out.status.success());
    let rows = stdout_str(&out).lines().count();
    assert!(
        rows < 31,
        "escaping orbit should stop early, got {rows} rows"
    );
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("escaped"), "stderr: {err}");
}

#[test]
fn bands_level_zero_matches_the_interval() {
    let out = pdspec(&["bands", "--level", "0", "--bound", "2"]);
    assert!(out.status.success());
    let text = stdout_str(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("lo,hi,level"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let lo: f64 = row[0].parse().unwrap();
    let hi: f64 = row[1].parse().unwrap();
    assert!((lo - -6.0).abs() < 1e-6);
    assert!((hi - -2.0).abs() < 1e-6);
    assert_eq!(row[2], "0");
    assert!(lines.next().is_none());
}

#[test]
fn unknown_flag_exits_with_usage_code() {
    let out = pdspec(&["bands", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_value_exits_with_usage_code() {
    let out = pdspec(&["growth", "--nic-index", "11"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn equal_potential_values_rejected() {
    let out = pdspec(&["seq", "--potential-a", "1", "--potential-b", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn json_outputs_are_byte_identical_across_runs() {
    let a = pdspec(&["bands", "--level", "6", "--bound", "2", "--json"]);
    let b = pdspec(&["bands", "--level", "6", "--bound", "2", "--json"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    // keys arrive sorted
    let text = stdout_str(&a);
    let (i, j, k) = (
        text.find("\"bands\"").unwrap(),
        text.find("\"c_emp\"").unwrap(),
        text.find("\"total_measure\"").unwrap(),
    );
    assert!(i < j && j < k);
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = std::env::temp_dir().join(format!("pdspec-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("run.conf");
    std::fs::write(&path, "start = 0\nlen = 4\n").unwrap();

    let from_file = pdspec(&["seq", "--config", path.to_str().unwrap()]);
    assert_eq!(stdout_str(&from_file).trim(), "abaa");

    let overridden = pdspec(&["seq", "--config", path.to_str().unwrap(), "--len", "8"]);
    assert_eq!(stdout_str(&overridden).trim(), "abaaabab");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn growth_emits_csv_then_summary() {
    let out = pdspec(&["growth", "--lmax", "2^10", "--nic-index", "0"]);
    assert!(out.status.success());
    let text = stdout_str(&out);
    assert!(text.starts_with("L,norm\n"));
    let last = text.lines().last().unwrap();
    let v: serde_json::Value = serde_json::from_str(last).unwrap();
    assert!(v["gamma1_emp"].as_f64().unwrap() > 0.0);
    assert!(v["gamma2_emp"].as_f64().unwrap() >= v["gamma1_emp"].as_f64().unwrap());
    let alpha = v["alpha_emp"].as_f64().unwrap();
    assert!(alpha > 0.0 && alpha <= 1.0);
    assert!(v["ledger_alpha"].as_f64().unwrap() > 0.0);
}

#[test]
fn report_bundle_is_deterministic_and_well_formed() {
    let args = [
        "report",
        "--half-width",
        "384",
        "--tmax",
        "120",
        "--growth-energies",
        "1",
    ];
    let a = pdspec(&args);
    assert!(
        a.status.success(),
        "report failed: {}",
        String::from_utf8_lossy(&a.stderr)
    );
    let b = pdspec(&args);
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_str(stdout_str(&a).trim()).unwrap();
    let alpha = v["alpha"].as_f64().unwrap();
    assert!(alpha > 0.0 && alpha <= 1.0);
    assert_eq!(v["failures"].as_u64(), Some(0));
    assert!(v["transport"]["guarneri"]["pass"].as_bool().unwrap());
    assert!(v["provenance"]["config_hash"].as_str().unwrap().len() == 16);
}

#[test]
fn thread_cap_does_not_change_output() {
    for args in [
        vec!["bands", "--level", "5", "--bound", "2", "--json"],
        vec![
            "transport",
            "--half-width",
            "384",
            "--p",
            "2",
            "--tmax",
            "120",
        ],
    ] {
        let free = pdspec(&args);
        let capped = Command::new(env!("CARGO_BIN_EXE_pdspec"))
            .args(&args)
            .env("PDSPEC_THREADS", "1")
            .output()
            .expect("binary runs");
        assert!(capped.status.success());
        assert_eq!(free.stdout, capped.stdout, "args: {args:?}");
    }
}

#[test]
fn transport_small_box_reports_the_boundary_cap() {
    let out = pdspec(&[
        "transport",
        "--half-width",
        "64",
        "--p",
        "2",
        "--tmax",
        "300",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("half-width"), "stderr: {err}");
}
