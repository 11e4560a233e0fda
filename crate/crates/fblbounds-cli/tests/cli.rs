//! End-to-end tests of the `fblbounds` binary: emitted table shape,
//! numeric conventions, determinism, and exit-code contract.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fblbounds"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "expected success for {args:?}: stderr = {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

const BSC11: &str = r#"{"kind":"bsc","p":0.11}"#;
const BEC50: &str = r#"{"kind":"bec","p":0.5}"#;
const Z50: &str = r#"{"kind":"z","p":0.5}"#;

/// Parses an emitted curve CSV into (n, bound) -> (rate_bits, rate_nats, status).
fn parse_curve(text: &str) -> BTreeMap<(u64, String), (Option<f64>, Option<f64>, String)> {
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,eps,bound,rate_bits,rate_nats,status,t0",
        "curve header is part of the output contract"
    );
    let mut rows = BTreeMap::new();
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 7, "curve rows have exactly 7 columns: {line}");
        let parse = |s: &str| if s.is_empty() { None } else { Some(s.parse::<f64>().unwrap()) };
        rows.insert(
            (f[0].parse().unwrap(), f[2].to_string()),
            (parse(f[3]), parse(f[4]), f[5].to_string()),
        );
    }
    rows
}

#[test]
fn bsc_curve_emits_full_grid_with_nep_above_so() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bsc.csv");
    run_ok(&[
        "curve", "--channel", BSC11, "--bounds", "so,nep,normal", "--n", "200:2000:100", "--eps",
        "1e-3", "--format", "csv", "--out", out.to_str().unwrap(),
    ]);
    let rows = parse_curve(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(rows.len(), 57, "19 blocklengths x 3 bounds");
    for n in (200..=2000).step_by(100) {
        let so = rows[&(n, "so".into())].1.unwrap();
        let nep = rows[&(n, "nep".into())].1.unwrap();
        assert!(nep >= so, "nep >= so must hold at n = {n}: {nep} < {so}");
    }
}

#[test]
fn bec_nep_equals_so_rowwise() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bec.csv");
    run_ok(&[
        "curve", "--channel", BEC50, "--bounds", "so,nep", "--n", "200:2000:100", "--eps", "1e-6",
        "--format", "csv", "--out", out.to_str().unwrap(),
    ]);
    let rows = parse_curve(&std::fs::read_to_string(&out).unwrap());
    for n in (200..=2000).step_by(100) {
        let so = rows[&(n, "so".into())].1.unwrap();
        let nep = rows[&(n, "nep".into())].1.unwrap();
        assert!((so - nep).abs() <= 1e-10, "erasure identity broken at n = {n}");
    }
}

#[test]
fn z_tstar_pseudo_bound_reports_both_inputs() {
    let text = run_ok(&[
        "curve", "--channel", Z50, "--bounds", "tstar", "--n", "1000", "--eps", "1e-6",
        "--format", "json",
    ]);
    let rows: serde_json::Value = serde_json::from_str(&text).unwrap();
    let row = &rows.as_array().unwrap()[0];
    assert_eq!(row["bound"], "tstar");
    let t0 = row["t0"].as_f64().unwrap();
    let t_cap0 = row["diagnostics"]["t_cap0"].as_f64().unwrap();
    assert!((t_cap0 - 0.4).abs() < 1e-9, "capacity input of this channel is 0.4");
    assert!((t0 - t_cap0).abs() > 1e-3, "optimum stays away from the capacity input");
}

#[test]
fn tstar_sweep_ratios_are_normalized_and_capacity_ratio_decays() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("tstar.csv");
    run_ok(&[
        "tstar", "--p", "0.05:0.95:0.05", "--n", "1000", "--eps", "1e-6", "--format", "csv",
        "--out", out.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "p,n,eps,t_star0,t_cap0,obj_t_star,obj_capacity,obj_uniform,\
         ratio_capacity,ratio_uniform,status"
    );
    let mut cap_ratios = Vec::new();
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 11);
        assert_eq!(f[10], "ok", "all sweep points solve: {line}");
        let ratio_cap: f64 = f[8].parse().unwrap();
        let ratio_uni: f64 = f[9].parse().unwrap();
        assert!(ratio_cap <= 1.0 + 1e-12, "optimum dominates the capacity input");
        assert!(ratio_uni <= 1.0 + 1e-12, "optimum dominates the uniform input");
        cap_ratios.push(ratio_cap);
    }
    assert_eq!(cap_ratios.len(), 19);
    for w in cap_ratios.windows(2) {
        assert!(w[1] < w[0], "capacity-input ratio decays as the channel gets noisier");
    }
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let args = |out: &Path| {
        vec![
            "curve".into(),
            "--channel".into(),
            BSC11.to_string(),
            "--bounds".into(),
            "so,nep,exact_converse_max".into(),
            "--n".into(),
            "200:600:100".into(),
            "--eps".into(),
            "1e-3".into(),
            "--format".into(),
            "csv".into(),
            "--out".into(),
            out.to_str().unwrap().into(),
        ]
    };
    for out in [&a, &b] {
        let st = bin().args(args(out)).status().unwrap();
        assert!(st.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn json_and_csv_agree_on_every_number() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("t.csv");
    let base = [
        "curve", "--channel", BSC11, "--bounds", "so,normal", "--n", "500:700:100", "--eps",
        "1e-4",
    ];
    run_ok(&[&base[..], &["--format", "csv", "--out", csv_path.to_str().unwrap()]].concat());
    let json_text = run_ok(&[&base[..], &["--format", "json"]].concat());
    let rows: serde_json::Value = serde_json::from_str(&json_text).unwrap();
    let csv_rows = parse_curve(&std::fs::read_to_string(&csv_path).unwrap());
    let arr = rows.as_array().unwrap();
    assert_eq!(arr.len(), csv_rows.len());
    for row in arr {
        let key = (row["n"].as_u64().unwrap(), row["bound"].as_str().unwrap().to_string());
        let (bits, nats, status) = &csv_rows[&key];
        assert_eq!(row["status"].as_str().unwrap(), status);
        assert_eq!(row["rate_bits"].as_f64(), *bits, "formats agree bit-for-bit at {key:?}");
        assert_eq!(row["rate_nats"].as_f64(), *nats);
    }
}

#[test]
fn emitted_rates_convert_between_units_on_load() {
    let text = run_ok(&[
        "curve", "--channel", BEC50, "--bounds", "so,nep,exact_converse_avg", "--n", "300:900:300",
        "--eps", "1e-5", "--format", "json",
    ]);
    let rows: serde_json::Value = serde_json::from_str(&text).unwrap();
    for row in rows.as_array().unwrap() {
        let bits = row["rate_bits"].as_f64().unwrap();
        let nats = row["rate_nats"].as_f64().unwrap();
        assert!(
            (bits - nats / std::f64::consts::LN_2).abs() <= 1e-11,
            "unit conversion must survive the 12-digit serialization: {row}"
        );
    }
}

#[test]
fn invalid_channel_spec_exits_2_with_machine_readable_error() {
    let out = run(&["capacity", "--channel", r#"{"kind":"bsc","p":1.5}"#]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value =
        serde_json::from_slice(&out.stderr).expect("stderr carries an error object");
    assert!(err["error"].is_string() && err["message"].is_string(), "error shape: {err}");
}

#[test]
fn unreachable_grid_emits_statuses_and_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("fail.csv");
    let out = run(&[
        "curve", "--channel", BSC11, "--bounds", "jar_achievability", "--n", "8:10:1", "--eps",
        "1e-9", "--format", "csv", "--out", out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "every row failed numerically");
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"].is_string());
    let rows = parse_curve(&std::fs::read_to_string(&out_path).unwrap());
    assert_eq!(rows.len(), 3, "the table is still emitted with per-row statuses");
    for ((n, _), (bits, nats, status)) in &rows {
        assert!(bits.is_none() && nats.is_none(), "no rate fabricated at n = {n}");
        assert_ne!(status, "ok");
    }
}

#[test]
fn partial_failures_keep_exit_zero_and_mark_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("partial.csv");
    let out = run(&[
        "curve", "--channel", BEC50, "--bounds", "so,normal_ln", "--n", "500", "--eps", "1e-4",
        "--format", "csv", "--out", out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "a grid with some good rows succeeds");
    let rows = parse_curve(&std::fs::read_to_string(&out_path).unwrap());
    assert_eq!(rows[&(500, "so".into())].2, "ok");
    assert_eq!(
        rows[&(500, "normal_ln".into())].2,
        "unsupported",
        "the third-order normal calibration is refused off its channel"
    );
}

#[test]
fn verify_runs_self_checks() {
    let text = run_ok(&["verify"]);
    assert!(text.lines().filter(|l| l.starts_with("ok ")).count() >= 6);
    assert!(!text.contains("FAIL"));
}

#[test]
fn verify_replays_an_emitted_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bec.csv");
    run_ok(&[
        "curve", "--channel", BEC50, "--bounds", "so,nep,exact_converse_max", "--n",
        "400:800:200", "--eps", "1e-6", "--format", "csv", "--out", out.to_str().unwrap(),
    ]);
    let text = run_ok(&["verify", "--rows", out.to_str().unwrap(), "--channel", BEC50]);
    assert!(text.contains("replayed 9 rows") && text.contains("ok replay"), "{text}");
}

#[test]
fn capacity_matches_closed_form() {
    let text = run_ok(&["capacity", "--channel", BSC11, "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let cap = v["capacity_nats"].as_f64().unwrap();
    let h = |x: f64| -x * x.ln() - (1.0 - x) * (1.0 - x).ln();
    assert!((cap - (std::f64::consts::LN_2 - h(0.11))).abs() < 1e-12);
    assert_eq!(v["kind"], "bsc");
}
