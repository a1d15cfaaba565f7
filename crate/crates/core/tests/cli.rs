use std::process::Command;

fn sqgauss(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_sqgauss"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn write_config(dir: &tempfile::TempDir, body: &str) -> String {
    let path = dir.path().join("model.toml");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const AR1: &str = "[kernel]\nkind = \"ar1\"\ntheta = 0.5\n\n[mean]\nkind = \"constant\"\nm_inf = 1.0\n";

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn white_limit_row() {
    let (code, out, _) = sqgauss(&["limit", "--alpha", "0.5"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("alpha,ell0,ell1,ell,quadrature_delta\n"));
    assert!((column(&out, "ell0")[0] - 0.346574).abs() < 1e-6);
    assert_eq!(column(&out, "ell1")[0], 0.0);
    assert!((column(&out, "ell")[0] - 0.346574).abs() < 1e-6);
}

#[test]
fn converge_error_decreases() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, AR1);
    let (code, out, err) = sqgauss(&["converge", "--config", &cfg, "--alpha", "0.5", "--t", "128:1024:128"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.starts_with("t,scaled_log_laplace,neg_ell,abs_error\n"));
    let e = column(&out, "abs_error");
    assert_eq!(e.len(), 8);
    assert!(e.windows(2).all(|w| w[1] < w[0]), "{e:?}");
}

#[test]
fn wiener_hopf_out_of_range() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, AR1);
    let (code, _, err) = sqgauss(&["wienerhopf", "--config", &cfg, "--alpha", "0.5"]);
    assert_eq!(code, 3);
    assert!(err.contains("AlphaOutOfRange"), "{err}");
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "[kernel]\nkind = \"ar1\"\ntheta = 0.5\ncolour = 1\n");
    assert_eq!(sqgauss(&["limit", "--config", &cfg, "--alpha", "0.5"]).0, 2);
    assert_eq!(sqgauss(&["limit"]).0, 2);
    assert_eq!(sqgauss(&["converge", "--alpha", "0.5", "--t", "8192"]).0, 2);
    assert_eq!(sqgauss(&["limit", "--alpha", "-1"]).0, 2);
    assert_eq!(sqgauss(&["bogus"]).0, 2);
    let bad_theta = write_config(&dir, "[kernel]\nkind = \"ar1\"\ntheta = 1.5\n");
    assert_eq!(sqgauss(&["limit", "--config", &bad_theta, "--alpha", "0.5"]).0, 2);
}

#[test]
fn object_format_mirrors_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, AR1);
    let out_path = dir.path().join("rows.json");
    let (code, _, err) = sqgauss(&[
        "hypotheses",
        "--config",
        &cfg,
        "--t",
        "4,8",
        "--format",
        "obj",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let rows: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1]["t"], 8);
    assert!(rows[0]["covariance_gap"].as_f64().unwrap().is_finite());
}

#[test]
fn every_subcommand_runs_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, AR1);
    let runs: [&[&str]; 7] = [
        &["limit", "--alpha", "0.1,0.5,2"],
        &["converge-conditioned", "--alpha", "0.5", "--t", "16,32", "--x", "-2"],
        &["wienerhopf", "--alpha", "0.05,0.1"],
        &["decompose", "--alpha", "0,1", "--t", "1,4"],
        &["mc-check", "--alpha", "0.5", "--t", "8", "--samples", "2000", "--seed", "9"],
        &["hypotheses", "--t", "16"],
        &["ar1-density", "--alpha", "0,1"],
    ];
    for args in runs {
        let mut full = args.to_vec();
        full.extend(["--config", cfg.as_str()]);
        let (code, first, err) = sqgauss(&full);
        assert_eq!(code, 0, "{args:?}: {err}");
        assert!(!first.contains("NaN") && !first.contains("inf"), "{first}");
        assert_eq!(sqgauss(&full).1, first, "{args:?}");
    }
}
