use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn vlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vlab")).args(args).output().unwrap()
}

fn write_json(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn small_run(out: &Path) -> Value {
    json!({
        "scenario": { "name": "steady_shear", "amplitude": 1.0, "mode": 2, "rho_contrast": 0.0 },
        "nu": 0.02,
        "grid": { "nx": 4, "ny": 128, "stretch": 2.0 },
        "horizon": 0.1,
        "output_interval": 0.05,
        "output_dir": out,
    })
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let load = |n: &str| std::fs::read_to_string(root.join(n)).unwrap();
    viscous_limit::sweep::RunConfig::from_json(&load("heat_single.json")).unwrap();
    for n in ["heat_sweep.json", "density_sweep.json"] {
        let c: viscous_limit::sweep::SweepConfig = serde_json::from_str(&load(n)).unwrap();
        c.run.validate().unwrap();
    }
    let _: viscous_limit::cli::CorrectorCheckConfig = serde_json::from_str(&load("corrector.json")).unwrap();
    let _: viscous_limit::cli::InequalityConfig = serde_json::from_str(&load("inequalities.json")).unwrap();
}

#[test]
fn simulate_writes_diagnostics_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut cfg = small_run(&out);
    cfg["snapshots"] = json!(true);
    let path = write_json(dir.path(), "run.json", &cfg);
    let o = vlab(&["simulate", "--config", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("energy_inequality=holds"));
    let diag = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert_eq!(diag.lines().count(), 4);
    let flows = std::fs::read_dir(&out)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "flow"))
        .count();
    assert!(flows >= 2);
}

#[test]
fn sweep_writes_csv_report_and_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "run": small_run(&dir.path().join("sweep")),
        "nus": [0.04, 0.02, 0.01],
        "report": dir.path().join("sweep/report.svg"),
    });
    let path = write_json(dir.path(), "sweep.json", &cfg);
    let o = vlab(&["--workers", "2", "sweep", "--config", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("verdict: CONSISTENT"));
    let csv = dir.path().join("sweep/sweep.csv");
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 4);
    let svg = std::fs::read_to_string(dir.path().join("sweep/report.svg")).unwrap();
    assert!(svg.contains(r#"data-series="e_sup" data-slope=""#));

    let again = dir.path().join("again.svg");
    let o = vlab(&[
        "report",
        "--input",
        csv.to_str().unwrap(),
        "--out",
        again.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(again).unwrap(), svg);
}

#[test]
fn corrector_and_inequality_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "scenario": { "name": "cosine_shear", "amplitude": 1.0, "mode": 1, "rho_contrast": 0.0 },
        "grid": { "nx": 4, "ny": 128, "stretch": 2.0 },
        "nus": [0.2, 0.1, 0.05, 0.025],
        "output": dir.path().join("c/corr.csv"),
    });
    let o = vlab(&[
        "corrector-check",
        "--config",
        write_json(dir.path(), "c.json", &cfg).to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("dt_l2: identically zero"));
    let csv = std::fs::read_to_string(dir.path().join("c/corr.csv")).unwrap();
    assert!(csv.starts_with("nu,linf,grad_linf,l2,dt_l2,grad_l2,dist2_grad_linf\n"));
    assert_eq!(csv.lines().count(), 5);

    let cfg = json!({
        "grid": { "nx": 4, "ny": 128, "stretch": 2.0 },
        "eps": [0.2, 0.1, 0.05, 0.025],
        "seed": 3,
        "output": dir.path().join("ineq.csv"),
    });
    let o = vlab(&[
        "inequalities",
        "--config",
        write_json(dir.path(), "i.json", &cfg).to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("hardy sup"));
    let csv = std::fs::read_to_string(dir.path().join("ineq.csv")).unwrap();
    assert!(csv.starts_with("family,member,eps,hardy_ratio,poincare_ratio\n"));
    // three distance powers, three sines and six bumps at four eps values
    assert_eq!(csv.lines().count(), 1 + 12 * 4);
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_run(&dir.path().join("x"));
    cfg["bogus"] = json!(1);
    let o = vlab(&[
        "simulate",
        "--config",
        write_json(dir.path(), "a.json", &cfg).to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));

    let mut cfg = small_run(&dir.path().join("x"));
    cfg["nu"] = json!(-1.0);
    let o = vlab(&[
        "simulate",
        "--config",
        write_json(dir.path(), "b.json", &cfg).to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nu must be positive"));

    let o = vlab(&[
        "simulate",
        "--config",
        dir.path().join("missing.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unresolved_layer_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "scenario": { "name": "cosine_shear", "amplitude": 1.0, "mode": 1, "rho_contrast": 0.0 },
        "grid": { "nx": 4, "ny": 16, "stretch": 0.0 },
        "nus": [0.4, 0.2, 0.1, 0.05],
    });
    let o = vlab(&[
        "corrector-check",
        "--config",
        write_json(dir.path(), "c.json", &cfg).to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("refine"));
}
