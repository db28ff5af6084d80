use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

fn casimir(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_casimir"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) {
    let out = casimir(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn solve_mu_table_and_sidecar() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    run_ok(&["solve-mu", "--alpha", "0.4,0.3,0.3", "--rho-offset", "1", "--volumes", "1e3,6", "--out", out]);
    let text = std::fs::read_to_string(dir.path().join("solve_mu.csv")).unwrap();
    assert!(!text.contains('\r'));
    assert!(text.ends_with('\n'));
    let (header, rows) = read_csv(&dir.path().join("solve_mu.csv"));
    assert_eq!(header, ["volume", "beta_mu", "scaled_neg_beta_mu"]);
    assert_eq!(rows.len(), 7);
    for row in &rows {
        for cell in row {
            // 17 significant digits, and reading back is exact.
            let mantissa = cell.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.replace('.', "").len(), 17, "{cell}");
            assert_eq!(format!("{:.16e}", num(cell)), *cell);
        }
        assert!(num(&row[1]) < 0.0);
    }
    // -βμ̄·V is already within a few percent of A = 1.
    let last = num(&rows[6][2]);
    assert!((last - 1.0).abs() < 0.05, "{last}");
    let meta = read_json(&dir.path().join("solve_mu.json"));
    assert_eq!(meta["regime"], "TypeI");
    assert_eq!(meta["predicted_constant"], 1.0);
    assert!(meta["scaled"]["residual"].is_number());
    assert!(meta["scaled"]["converged"].is_boolean());
}

#[test]
fn dilute_gas_reaches_bulk_root() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    run_ok(&["solve-mu", "--alpha", "0.5,0.25,0.25", "--rho-offset=-1.5", "--out", out]);
    let meta = read_json(&dir.path().join("solve_mu.json"));
    let bulk = meta["bulk_beta_mu"].as_f64().unwrap();
    assert!(bulk < 0.0);
    let (_, rows) = read_csv(&dir.path().join("solve_mu.csv"));
    let last = num(&rows.last().unwrap()[1]);
    assert!((last - bulk).abs() < 1e-6 * bulk.abs(), "{last} vs {bulk}");
    assert!(meta["regime"].is_null());
}

#[test]
fn output_is_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        run_ok(&["correlate", "--alpha", "0.6,0.2,0.2", "--rho-offset", "1", "--volumes", "1e3,5", "--out", dir.path().to_str().unwrap()]);
    }
    for f in ["correlate.csv", "correlate.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    }
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    let bad_sum = casimir(&["classify", "--alpha", "0.5,0.3,0.3", "--rho-offset", "1", "--out", out]);
    assert_eq!(bad_sum.status.code(), Some(2));
    let too_few = casimir(&["solve-mu", "--alpha", "0.4,0.3,0.3", "--rho-offset", "1", "--volumes", "1e3,0", "--out", out]);
    assert_eq!(too_few.status.code(), Some(2));
    let missing = casimir(&["solve-mu", "--rho-offset", "1", "--out", out]);
    assert_eq!(missing.status.code(), Some(2));
    let cfg = dir.path().join("broken.json");
    std::fs::write(&cfg, "{\n  \"alpha\": [0.4, 0.3, 0.3],\n  \"rho_offset\": oops\n}\n").unwrap();
    let broken = casimir(&["solve-mu", "--config", cfg.to_str().unwrap()]);
    assert_eq!(broken.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&broken.stderr).contains("line 3"));
    let unknown = casimir(&["frobnicate"]);
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("exp.json");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"alpha": [0.4, 0.3, 0.3], "rho_offset": 1.0, "volumes": {{"v0": 1000, "doublings": 4}}, "out": "{}"}}"#,
            dir.path().join("from_file").display()
        ),
    )
    .unwrap();
    run_ok(&["solve-mu", "--config", cfg.to_str().unwrap(), "--alpha", "0.6,0.2,0.2"]);
    let meta = read_json(&dir.path().join("from_file/solve_mu.json"));
    assert_eq!(meta["regime"], "TypeIII");
    assert_eq!(meta["setting"]["volumes"].as_array().unwrap().len(), 5);
}

#[test]
fn classify_reports_each_regime() {
    for (alpha, expected) in [("0.4,0.3,0.3", "TypeI"), ("0.5,0.25,0.25", "TypeII"), ("0.6,0.2,0.2", "TypeIII")] {
        let dir = TempDir::new().unwrap();
        run_ok(&["classify", "--alpha", alpha, "--rho-offset", "1", "--out", dir.path().to_str().unwrap()]);
        let meta = read_json(&dir.path().join("classify.json"));
        assert_eq!(meta["classification"]["verdict"]["verdict"], "condensate", "{alpha}");
        assert_eq!(meta["classification"]["verdict"]["detail"], expected, "{alpha}");
        let (header, rows) = read_csv(&dir.path().join("classify.csv"));
        assert_eq!(header, ["series", "offset", "volume", "value"]);
        assert!(rows.iter().any(|r| r[0] == "threshold_window"));
    }
    let dir = TempDir::new().unwrap();
    run_ok(&["classify", "--alpha", "0.4,0.3,0.3", "--rho-offset=-1", "--out", dir.path().to_str().unwrap()]);
    let meta = read_json(&dir.path().join("classify.json"));
    assert_eq!(meta["classification"]["verdict"]["verdict"], "no_condensate");
}

#[test]
fn cycles_windows_against_prediction() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cycles.json");
    std::fs::write(
        &cfg,
        r#"{"alpha": [0.4, 0.3, 0.3], "rho_offset": 1.0,
            "cycles": {"windows": [{"delta": 1.0, "x": 0.5, "y": 5.0},
                                   {"delta": 1.5, "x": 0.1, "y": 10.0}]}}"#,
    )
    .unwrap();
    run_ok(&["cycles", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    let meta = read_json(&dir.path().join("cycles.json"));
    let windows = meta["windows"].as_array().unwrap();
    let expected = (-0.5f64).exp() - (-5.0f64).exp();
    assert!((windows[0]["predicted"].as_f64().unwrap() - expected).abs() < 1e-15);
    assert_eq!(windows[1]["predicted"], 0.0);
    let beyond = windows[1]["series"]["values"].as_array().unwrap();
    assert!(beyond.last().unwrap().as_f64().unwrap() < 1e-3);
    assert_eq!(meta["hierarchy"]["verdict"]["kind"], "macroscopic");
    let long = meta["long"]["extrapolated_limit"].as_f64().unwrap();
    assert!((long - 1.0).abs() < 0.01, "{long}");
    let (_, rows) = read_csv(&dir.path().join("cycles.csv"));
    assert_eq!(rows.iter().filter(|r| r[0] == "window").count(), 22);
}

#[test]
fn correlate_rejects_paths_beyond_half_period() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("corr.json");
    std::fs::write(
        &cfg,
        r#"{"alpha": [0.6, 0.2, 0.2], "rho_offset": 1.0, "volumes": {"v0": 1000, "doublings": 6},
            "correlate": {"paths": [{"coefficients": [1, 0, 0], "exponents": [0.4, 0, 0]},
                                    {"coefficients": [1, 0, 0], "exponents": [0.6, 0, 0]}]}}"#,
    )
    .unwrap();
    run_ok(&["correlate", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    let (header, rows) = read_csv(&dir.path().join("correlate.csv"));
    assert_eq!(header, ["path", "volume", "x1", "x2", "x3", "density", "sigma", "status"]);
    let meta = read_json(&dir.path().join("correlate.json"));
    let rho = meta["setting"]["rho"].as_f64().unwrap();
    for row in rows.iter().filter(|r| r[0] == "0") {
        assert!((num(&row[5]) / rho - 1.0).abs() < 1e-10);
        assert!(num(&row[6]) < num(&row[5]));
    }
    let rejected: Vec<_> = rows.iter().filter(|r| r[0] == "1").collect();
    assert_eq!(rejected.len(), 1);
    assert!(rejected[0][7].starts_with("rejected"));
    let predicted = meta["paths"][0]["predicted"].as_f64().unwrap();
    assert!((predicted - (-2.0 * std::f64::consts::PI).exp()).abs() < 1e-15);
}
