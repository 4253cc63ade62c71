use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn pcw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcw"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
}

fn error_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.lines().last().expect("stderr line")).expect("error JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn homogeneous_bulk_reports_no_gap_and_succeeds() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("homogeneous.json");
    let out = pcw(&[
        "bulk-bands",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let gap: Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("bulk_bands_gap.json")).unwrap())
            .unwrap();
    assert_eq!(gap["status"], "no_gap");
    let csv = fs::read_to_string(tmp.path().join("bulk_bands.csv")).unwrap();
    assert!(csv.starts_with("path_2pi_over_a,k_x_2pi_over_a,k_y_2pi_over_a,band_index,omega_a_over_lambda,wavelength_nm\n"));
}

#[test]
fn bulk_gap_json_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("sweep_small.json");
    let out = pcw(&[
        "bulk-bands",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
        "--plot",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let gap: Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("bulk_bands_gap.json")).unwrap())
            .unwrap();
    assert_eq!(gap["status"], "gap");
    let lo = gap["omega_lo"].as_f64().unwrap();
    let hi = gap["omega_hi"].as_f64().unwrap();
    assert!(lo < hi);
    assert!((gap["lambda_hi_nm"].as_f64().unwrap() - 240.0 / lo).abs() < 1e-9);
    assert!((gap["lambda_lo_nm"].as_f64().unwrap() - 240.0 / hi).abs() < 1e-9);
    let svg = fs::read_to_string(tmp.path().join("bulk_bands.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn malformed_json_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write(tmp.path(), "bad.json", "{\"device\": ");
    let out = pcw(&["bulk-bands", "--config", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"]["kind"], "ConfigParse");
}

#[test]
fn unknown_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config("homogeneous.json"))
        .unwrap()
        .replace("\"cutoff\"", "\"cutof\"");
    let p = write(tmp.path(), "typo.json", &text);
    let out = pcw(&["bulk-bands", "--config", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let msg = error_json(&out)["error"]["message"]
        .as_str()
        .unwrap()
        .to_string();
    assert!(msg.contains("cutof"), "{msg}");
}

#[test]
fn out_of_range_setting_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config("homogeneous.json"))
        .unwrap()
        .replace("\"cutoff\": 3.0", "\"cutoff\": -1.0");
    let p = write(tmp.path(), "neg.json", &text);
    let out = pcw(&["bulk-bands", "--config", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"]["kind"], "InvalidParameter");
}

#[test]
fn unknown_subcommand_and_bad_threads() {
    assert_eq!(pcw(&["frobnicate"]).status.code(), Some(2));
    let cfg = config("homogeneous.json");
    let out = pcw(&[
        "slab-neff",
        "--config",
        cfg.to_str().unwrap(),
        "--threads",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn slab_neff_reports_index() {
    let cfg = config("reference.json");
    let out = pcw(&["slab-neff", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let n = v["n_eff"].as_f64().unwrap();
    assert!(n > 1.0 && n < 3.475);
}

#[test]
fn pipeline_reports_budget_and_table() {
    let budget = config("budget.json");
    let out = pcw(&["pipeline", budget.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let (json, table) = text.split_once("\n\n").unwrap();
    let v: Value = serde_json::from_str(json).unwrap();
    let eta = v["budget"]["eta"].as_f64().unwrap();
    assert!((eta - 4e-6 / 0.63).abs() < 1e-15);
    assert!(v["budget"]["eta_db"].as_f64().unwrap() < -50.0);
    assert!(table.contains("epsilon") && table.contains("required_beta2"));
}

#[test]
fn pipeline_eta_db_sets_extinction() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write(
        tmp.path(),
        "b.json",
        r#"{"t_2in": 0.63, "t_1out": 0.89, "beta1": 0.98, "beta2": 0.05}"#,
    );
    let out = pcw(&[
        "pipeline",
        p.to_str().unwrap(),
        "--eta-db",
        "-50",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("pipeline.json")).unwrap())
            .unwrap();
    assert!((v["budget"]["eta"].as_f64().unwrap() - 1e-5).abs() < 1e-18);
}

#[test]
fn pipeline_missing_field_names_it() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write(
        tmp.path(),
        "b.json",
        r#"{"t_1in": 4e-6, "t_2in": 0.63, "beta1": 0.98, "beta2": 0.05}"#,
    );
    let out = pcw(&["pipeline", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let msg = error_json(&out)["error"]["message"]
        .as_str()
        .unwrap()
        .to_string();
    assert!(msg.contains("t_1out"), "{msg}");
}

#[test]
fn maps_without_wavelengths_is_a_usage_error() {
    let cfg = config("sweep_small.json");
    let out = pcw(&["maps", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn maps_outside_gap_is_a_computation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("sweep_small.json");
    let out = pcw(&[
        "maps",
        "--config",
        cfg.to_str().unwrap(),
        "--wavelengths",
        "1500",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"]["kind"], "NoneFound");
}

#[test]
fn maps_files_and_summaries() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("sweep_small.json");
    let out = pcw(&[
        "maps",
        "--config",
        cfg.to_str().unwrap(),
        "--wavelengths",
        "950,945",
        "--out",
        tmp.path().to_str().unwrap(),
        "--plot",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let mut names: Vec<String> = fs::read_dir(tmp.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    assert_eq!(names, ["maps_dual_0945.000.csv", "maps_dual_0950.000.csv"]);
    let csv = fs::read_to_string(tmp.path().join(&names[0])).unwrap();
    assert!(csv.starts_with("x_nm,y_nm,f1,f2,beta1,beta2,epsilon,in_mask\n"));
    let summary: Value = serde_json::from_str(
        &fs::read_to_string(tmp.path().join("maps_dual_summary.json")).unwrap(),
    )
    .unwrap();
    let list = summary.as_array().unwrap();
    assert_eq!(list.len(), 2);
    assert_eq!(list[0]["wavelength_nm"].as_f64().unwrap(), 950.0);
    for s in list {
        for key in [
            "wavelength_nm",
            "ng1",
            "ng2",
            "beta1_max",
            "fractions",
            "working_fraction",
        ] {
            assert!(s.get(key).is_some(), "missing {key}");
        }
        let f = &s["fractions"];
        let (a, b, c) = (
            f["0.85"].as_f64().unwrap(),
            f["0.90"].as_f64().unwrap(),
            f["0.95"].as_f64().unwrap(),
        );
        assert!(a >= b && b >= c);
    }
    assert!(tmp.path().join("maps_dual_0950.000_beta1.svg").exists());
}

#[test]
fn sweep_curves_are_nested() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("sweep_small.json");
    let out = pcw(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(tmp.path().join("sweep_dual.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header[0], "wavelength_nm");
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let (c85, c90, c95, cw) = (
        col("fraction_beta1_ge_0.85"),
        col("fraction_beta1_ge_0.90"),
        col("fraction_beta1_ge_0.95"),
        col("working_fraction"),
    );
    let mut rows = 0;
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f[col("status")] != "ok" {
            continue;
        }
        let v = |c: usize| f[c].parse::<f64>().unwrap();
        assert!(v(c85) >= v(c90) && v(c90) >= v(c95) && v(c95) >= v(cw));
        rows += 1;
    }
    assert_eq!(rows, 4);
}

#[test]
fn wg_bands_reports_parity_and_peak() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("sweep_small.json");
    let out = pcw(&[
        "wg-bands",
        "dual",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(tmp.path().join("wg_bands_dual.csv")).unwrap();
    assert!(csv.starts_with("k_x_2pi_over_a,band_index,omega_a_over_lambda,wavelength_nm,parity,ng,localization,guided\n"));
    let report: Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("wg_bands_dual.json")).unwrap())
            .unwrap();
    let parities: Vec<&str> = report["guided_bands"]
        .as_array()
        .unwrap()
        .iter()
        .map(|b| b["parity"].as_str().unwrap())
        .collect();
    assert!(
        parities.contains(&"even") && parities.contains(&"odd"),
        "{parities:?}"
    );
    let peak: Value = serde_json::from_str(
        &fs::read_to_string(tmp.path().join("wg_bands_dual_ng_peak.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(peak["status"], "ok");
}
