use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_torus-psido"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn read_csv(p: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(p).unwrap();
    let h = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(|s| s.parse().unwrap()).collect()).collect();
    (h, rows)
}

#[test]
fn check_symbol_passes_for_bessel_power() {
    let d = tempfile::tempdir().unwrap();
    let out = run(d.path(), "[symbol]\nfamily = \"bessel_power\"\nm = 2.0\n", &["check-symbol"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let rep: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.path().join("out/check-symbol.json")).unwrap()).unwrap();
    assert_eq!(rep["passed"], true);
    assert_eq!(rep["command"], "check-symbol");
}

#[test]
fn log_on_keyhole_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    let cfg = "[symbol]\nfamily = \"laplace_plus_one\"\n[contour]\nkind = \"keyhole\"\n";
    let out = run(d.path(), cfg, &["funcalc", "--f", "log"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn bad_config_exits_2() {
    let d = tempfile::tempdir().unwrap();
    let out = run(d.path(), "[symbol]\nfamily = \"bessel_power\"\nm = 2.0\nbogus = 1\n", &["check-symbol"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn heat_trace_on_small_lattice() {
    let d = tempfile::tempdir().unwrap();
    let cfg = "[grid]\nn = 1\nN = 8\n[symbol]\nfamily = \"laplace_plus_one\"\n[expansion]\ngrade = 0\n[sweep]\nt = [0.5, 1.0]\n";
    let out = run(d.path(), cfg, &["traces", "heat", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(!d.path().join("out/traces-heat.json").exists());
    let (h, rows) = read_csv(&d.path().join("out/heat_trace.csv"));
    assert_eq!(h[1], "operator_trace");
    let direct: f64 = (-4i32..4).map(|e| (-(1.0 + (e * e) as f64)).exp()).sum();
    assert!((rows[1][1] - direct).abs() < 1e-9);
    // the same sum folded by symmetry: e^-1 (1 + 2e^-1 + 2e^-4 + 2e^-9 + e^-16)
    let folded = (-1f64).exp() * (1.0 + 2.0 * (-1f64).exp() + 2.0 * (-4f64).exp() + 2.0 * (-9f64).exp() + (-16f64).exp());
    assert!((rows[1][1] - folded).abs() < 1e-9);
    assert!((rows[1][1] - 0.6521167).abs() < 1e-7);
}

#[test]
fn zeta_columns_agree() {
    let d = tempfile::tempdir().unwrap();
    let cfg = "[grid]\nn = 1\nN = 16\n[symbol]\nfamily = \"laplace_plus_one\"\n[sweep]\nz = [[2.0, 0.0], [1.5, 0.5]]\n";
    let out = run(d.path(), cfg, &["traces", "zeta"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let (_, rows) = read_csv(&d.path().join("out/zeta.csv"));
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert!((r[3] - r[2]).abs() < 1e-6 * r[2].abs());
        assert!((r[4] - r[2]).abs() < 1e-6 * r[2].abs());
    }
}
