use std::path::Path;
use std::process::{Command, Output};

fn nschb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nschb"))
        .args(args)
        .env("NSCHB_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("cfg.toml");
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL: &str = r#"
[grid]
nx = 16
ny = 16
[time]
dt = 1e-3
t_end = 0.01
[initial]
preset = "strong_data"
"#;

#[test]
fn run_writes_reports_and_exits_zero() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), SMALL);
    let out = d.path().join("out");
    let o = nschb(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    for f in [
        "energy.csv",
        "invariants.csv",
        "run.json",
        "final/phi_final.csv",
    ] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let r = nschb(&["report", "--out", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&r.stdout).contains("mass_drift"));
}

#[test]
fn resume_continues_from_final_snapshot() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), SMALL);
    let a = d.path().join("a");
    let b = d.path().join("b");
    assert_eq!(
        nschb(&["run", "--config", &cfg, "--out", a.to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );
    let o = nschb(&[
        "run",
        "--config",
        &cfg,
        "--out",
        b.to_str().unwrap(),
        "--resume",
        a.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn malformed_config_exits_one() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "[grid]\nnx = 16\nbogus = 1\n");
    assert_eq!(nschb(&["run", "--config", &cfg]).status.code(), Some(1));
    assert_eq!(nschb(&["run"]).status.code(), Some(1));
    assert_eq!(nschb(&["--help"]).status.code(), Some(0));
}

#[test]
fn pure_phase_initial_data_is_an_invariant_violation() {
    let d = tempfile::tempdir().unwrap();
    let body = "[grid]\nnx = 8\nny = 8\n[time]\ndt = 1e-3\nt_end = 0.01\n\
                [initial.phi]\nkind = \"constant\"\nvalue = 1.0\n";
    let cfg = write_config(d.path(), body);
    let out = d.path().join("out");
    let o = nschb(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn convergence_needs_three_levels() {
    let d = tempfile::tempdir().unwrap();
    let body = "mode = \"decoupled_heat\"\n[grid]\nnx = 8\nny = 8\n\
                [time]\ndt = 1e-3\nt_end = 0.01\n[initial]\nmanufactured = \"heat\"\n";
    let cfg = write_config(d.path(), body);
    assert_eq!(
        nschb(&["convergence", "--config", &cfg, "--levels", "8,16"])
            .status
            .code(),
        Some(1)
    );
    let out = d.path().join("conv");
    let o = nschb(&[
        "convergence",
        "--config",
        &cfg,
        "--levels",
        "8,16,32",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(out.join("convergence.json").exists());
    assert!(String::from_utf8_lossy(&o.stdout).contains("order[1]"));
}

#[test]
fn perturb_reports_amplification() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), SMALL);
    let out = d.path().join("p");
    let o = nschb(&[
        "perturb",
        "--config",
        &cfg,
        "--eps",
        "1e-3",
        "--t-end",
        "0.005",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(String::from_utf8_lossy(&o.stdout).contains("amplification"));
    assert!(out.join("lambda.csv").exists());
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        let cfg = nschb_core::config::SimConfig::load(&p).unwrap();
        cfg.validate()
            .unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        n += 1;
    }
    assert!(n >= 5);
}
