use std::path::Path;
use std::process::{Command, Output};

use fracback::cli::TIMESTAMP_KEY;
use fracback::elliptic::{assemble, eigendecompose, Field, Grid1D};
use fracback::evolution::{apply_s, FracOrder};
use serde_json::{json, Value};

const BIN: &str = env!("CARGO_BIN_EXE_fracback");

fn base(mode: &str) -> Value {
    json!({
        "mode": mode, "alpha": 0.5, "T": 1.0, "N": 32, "M": 128, "seed": 11,
        "coefficients": {"preset": "affine", "a0": 1.0, "a1": 0.5, "b1": 1.0, "c": -1.0},
        "source": {"preset": "none"},
        "data": {"preset": "sine", "mode": 1, "amplitude": 1.0}
    })
}

fn run(dir: &Path, name: &str, config: &Value) -> Output {
    let path = dir.join(name);
    std::fs::write(&path, config.to_string()).unwrap();
    Command::new(BIN).arg("--config").arg(&path).arg("--out").arg(dir.join("out")).output().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn read_field(path: &Path, grid: Grid1D) -> Field {
    let text = std::fs::read_to_string(path).unwrap();
    let rows: Vec<f64> = text
        .lines()
        .skip(2)
        .take(grid.n_interior())
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    Field::new(grid, rows).unwrap()
}

#[test]
fn config_errors_exit_2_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    for (key, value) in [("alpha", json!(0.0)), ("N", json!(1)), ("M", json!(0)), ("T", json!(0.0))] {
        let mut c = base("forward");
        c[key] = value;
        let out = run(dir.path(), "bad.json", &c);
        assert_eq!(out.status.code(), Some(2), "{key}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(&format!("`{key}`")), "{key}: {err}");
    }
    let mut c = base("forward");
    c.as_object_mut().unwrap().remove("seed");
    let out = run(dir.path(), "missing.json", &c);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`seed`"));
}

#[test]
fn forward_unperturbed_first_mode_matches_the_solution_operator() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = base("forward");
    c["coefficients"] = json!({"preset": "constant", "a11": 1.0, "b1": 0.0, "c": 0.0});
    c["data"] = json!({"preset": "eigenmode", "index": 0});
    let out = run(dir.path(), "fwd.json", &c);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let grid = Grid1D::new(1.0, 32).unwrap();
    let op = assemble(grid, &fracback::elliptic::EllipticCoefficients::constant(1.0, 0.0, 0.0)).unwrap();
    let basis = eigendecompose(&op).unwrap();
    let want = apply_s(&basis, FracOrder::new(0.5).unwrap(), 1.0, &basis.mode(0)).unwrap();
    let got = read_field(&dir.path().join("out/final.csv"), grid);
    let err = got.values.iter().zip(&want.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err <= 1e-12, "{err}");

    let report = read_json(&dir.path().join("out/forward_report.json"));
    assert!(report[TIMESTAMP_KEY].is_u64());
    assert_eq!(report["config"]["N"], 32);
}

#[test]
fn backward_recovers_a_forward_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = base("forward");
    c["data"] = json!({"preset": "bump", "amplitude": 1.0});
    assert!(run(dir.path(), "fwd.json", &c).status.success());
    let fixture = dir.path().join("fixture.csv");
    std::fs::rename(dir.path().join("out/final.csv"), &fixture).unwrap();

    c["mode"] = json!("backward");
    c["data"] = json!({"preset": "csv", "path": fixture});
    let out = run(dir.path(), "bwd.json", &c);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cert = &read_json(&dir.path().join("out/certificate.json"))["result"]["certificate"];
    assert!(cert["terminal_residual"].as_f64().unwrap() <= cert["cert_tol"].as_f64().unwrap());

    let grid = Grid1D::new(1.0, 32).unwrap();
    let got = read_field(&dir.path().join("out/reconstruction.csv"), grid);
    let want = Field::from_fn(grid, |x| x * (1.0 - x) * x.exp());
    let err = got.values.iter().zip(&want.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err <= 1e-8, "{err}");
}

#[test]
fn numerical_failure_exits_3_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = base("backward");
    c["data"] = json!({"preset": "bump", "amplitude": 1.0});
    c["spectral_cutoff"] = json!(2);
    let out = run(dir.path(), "cut.json", &c);
    assert_eq!(out.status.code(), Some(3));
    let diag = read_json(&dir.path().join("out/diagnostic.json"));
    assert!(diag["result"]["error"].as_str().unwrap().contains("certificate"));
}

#[test]
fn mode_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    std::fs::write(&path, base("forward").to_string()).unwrap();
    let out = Command::new(BIN)
        .arg("--config")
        .arg(&path)
        .args(["--mode", "ml_table", "--out"])
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let report = read_json(&dir.path().join("out/ml_table.json"));
    assert_eq!(report["config"]["mode"], "ml_table");
    assert!(report["result"]["max_rel_error"].as_f64().unwrap() <= 1e-10);
}
