use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qkflow::cli::{Manifest, Table};

fn qkflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qkflow")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn scenario(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(format!("{name}.toml"));
    fs::write(&p, body).unwrap();
    p
}

fn run(cfg: &Path, out: &Path) -> Output {
    qkflow(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn verb(v: &str, out: &Path) -> Output {
    qkflow(&[v, "--out", out.to_str().unwrap()])
}

const SPHERE: &str = "name = \"shrink_sphere\"\n[params]\nn = 3\nk = 2\nradius = 1.0\nn_theta = 32\ndt = 1e-4\n";
const LENS: &str = "name = \"flat_side_lens\"\n[params]\nn = 2\nk = 2\n";

#[test]
fn sphere_run_verify_plot_and_tamper() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(tmp.path(), "sphere", SPHERE);
    let out = tmp.path().join("run");
    let o = run(&cfg, &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let t = Table::read(&out, "trace.csv").unwrap().column("t").unwrap();
    let last = *t.last().unwrap();
    assert!((last - 0.5).abs() < 0.01, "{last}");

    let m = Manifest::read(&out).unwrap();
    assert_eq!(m.stop_reason, "extinct");
    assert!(m.claims.iter().all(|c| c.passed), "{:?}", m.claims);
    assert!(!out.join(".qkflow.lock").exists());
    assert_eq!(code(&verb("verify", &out)), 0);

    assert_eq!(code(&verb("emit-plotdata", &out)), 0);
    let vol = fs::read_to_string(out.join("plot/volume.dat")).unwrap();
    assert!(vol.starts_with("# t volume\n"));
    assert_eq!(vol.lines().count(), t.len() + 1);
    let m = Manifest::read(&out).unwrap();
    assert!(m.files.iter().any(|f| f.path == "plot/volume.dat"));
    assert!(m.files.iter().any(|f| f.path == "plot/README.txt"));
    assert_eq!(code(&verb("verify", &out)), 0);

    let csv = out.join("trace.csv");
    let mut body = fs::read_to_string(&csv).unwrap();
    body = body.replacen("e-1,", "e-2,", 1);
    fs::write(&csv, body).unwrap();
    let o = verb("verify", &out);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stdout).contains("hash:trace.csv"));
}

#[test]
fn runs_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(tmp.path(), "lens", LENS);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&run(&cfg, &a)), 0);
    assert_eq!(code(&run(&cfg, &b)), 0);
    for f in ["trajectory.csv", "star.csv", "profile_final.csv", "report.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn lens_interface_slope_and_plot_header() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(tmp.path(), "lens", LENS);
    let out = tmp.path().join("run");
    assert_eq!(code(&run(&cfg, &out)), 0);
    let tab = Table::read(&out, "trajectory.csv").unwrap();
    let (t, rho) = (tab.column("t").unwrap(), tab.column("rho").unwrap());
    let q = t.len() / 4;
    let slope = (rho[q].powi(2) - rho[0].powi(2)) / (t[q] - t[0]);
    assert!((slope + 2.0).abs() < 0.05, "{slope}");
    assert_eq!(code(&verb("emit-plotdata", &out)), 0);
    let dat = fs::read_to_string(out.join("plot/rho2.dat")).unwrap();
    assert!(dat.lines().any(|l| l.starts_with("# fit: d(rho^2)/dt -1.99")), "{dat}");
}

#[test]
fn coarse_lens_fails_interface_check() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(tmp.path(), "coarse", &format!("{LENS}dt = 0.00375\n"));
    let out = tmp.path().join("run");
    assert_eq!(code(&run(&cfg, &out)), 0);
    let o = verb("verify", &out);
    assert_eq!(code(&o), 1);
    let table = String::from_utf8_lossy(&o.stdout).to_string();
    assert!(table.lines().any(|l| l.starts_with("interface_law") && l.contains("FAIL")), "{table}");
}

#[test]
fn star_alarm_keeps_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(tmp.path(), "alarm", "name = \"flat_side_lens\"\n[params]\nn = 3\nk = 2\nt_end = 0.03\n");
    let out = tmp.path().join("run");
    let o = run(&cfg, &out);
    assert_eq!(code(&o), 3);
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "alarm");
    let m = Manifest::read(&out).unwrap();
    assert!(m.files.iter().any(|f| f.path == "error.json"));
    assert!(m.files.iter().any(|f| f.path == "trajectory.csv"));
    assert_eq!(code(&verb("verify", &out)), 1);
}

#[test]
fn audit_plot_is_log_log() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(tmp.path(), "audit", "name = \"linearization_audit\"\n");
    let out = tmp.path().join("run");
    assert_eq!(code(&run(&cfg, &out)), 0);
    assert_eq!(code(&verb("verify", &out)), 0);
    assert_eq!(code(&verb("emit-plotdata", &out)), 0);
    let dat = fs::read_to_string(out.join("plot/a11.dat")).unwrap();
    let pts: Vec<(f64, f64)> = dat
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let v: Vec<f64> = l.split_whitespace().map(|x| x.parse().unwrap()).collect();
            (v[0], v[1])
        })
        .collect();
    let (a, b) = (pts[0], pts[pts.len() - 1]);
    assert!(((b.1 - a.1) / (b.0 - a.0) - 2.0).abs() < 0.1);
}

#[test]
fn malformed_config_leaves_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    for body in [
        "name = \"shrink_sphere\"\n[params]\nn = \"three\"\n",
        "name = \"shrink_sphere\"\n[params]\nradious = 1.0\n",
        "name = \"nothing\"\n",
        "this is not toml",
    ] {
        let cfg = scenario(tmp.path(), "bad", body);
        let o = run(&cfg, &out);
        assert_eq!(code(&o), 2, "{body}");
        let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
        assert_eq!(err["error"], "invalid_config");
        assert!(!out.exists());
    }
}

#[test]
fn usage_errors_and_missing_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&qkflow(&["launch"])), 2);
    assert_eq!(code(&qkflow(&["run"])), 2);
    assert_eq!(code(&verb("emit-plotdata", tmp.path())), 2);
    assert_eq!(code(&verb("verify", tmp.path())), 2);
    assert_eq!(code(&qkflow(&["--help"])), 0);
}

#[test]
fn locked_or_busy_directory_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(tmp.path(), "audit", "name = \"linearization_audit\"\n");
    let out = tmp.path().join("run");
    fs::create_dir(&out).unwrap();
    fs::write(out.join(".qkflow.lock"), "").unwrap();
    let o = run(&cfg, &out);
    assert_eq!(code(&o), 2);
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "locked");
    fs::remove_file(out.join(".qkflow.lock")).unwrap();
    fs::write(out.join("stray.txt"), "x").unwrap();
    assert_eq!(code(&run(&cfg, &out)), 2);
}

#[test]
fn seed_flag_is_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(tmp.path(), "audit", "name = \"linearization_audit\"\nseed = 3\n");
    let out = tmp.path().join("run");
    let o = qkflow(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "11"]);
    assert_eq!(code(&o), 0);
    assert_eq!(Manifest::read(&out).unwrap().scenario.seed, 11);
}
