use std::path::Path;
use std::process::Command;

use steuler::manifest::RunManifest;

fn steuler(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_steuler")).args(args).env_remove("STEULER_OUT").output().unwrap()
}

fn small(out: &Path) -> Vec<String> {
    ["--n", "3", "--dt", "0.01", "--T", "0.1", "--paths", "4", "--save-every", "2", "--out"]
        .iter()
        .map(|s| s.to_string())
        .chain([out.display().to_string()])
        .collect()
}

fn args<'a>(head: &'a str, rest: &'a [String]) -> Vec<&'a str> {
    std::iter::once(head).chain(rest.iter().map(|s| s.as_str())).collect()
}

#[test]
fn ensemble_csv_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = steuler(&args("ensemble", &small(dir.path())));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("ensemble.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,mean_L2,se_L2,mean_H1,se_H1,envelope_H1,mean_M,se_M,qv_gap,se_qv");
    assert_eq!(lines.count(), 6);
    let m = RunManifest::read(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(m.command, "ensemble");
    assert_eq!(m.settings.paths, 4);
}

#[test]
fn replay_reproduces_outputs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut flags = small(a.path());
    flags.extend(["--noise", "qwiener:2", "--ic", "random:3", "--scheme", "strat-heun"].map(String::from));
    assert!(steuler(&args("run", &flags)).status.success());
    let manifest = a.path().join("manifest.json").display().to_string();
    let out = steuler(&["replay", &manifest, "--out", &b.path().display().to_string()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["norms.csv", "states.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn tables_are_antisymmetric() {
    let dir = tempfile::tempdir().unwrap();
    let out = steuler(&["tables", "--n", "2", "--out", &dir.path().display().to_string()]);
    assert!(out.status.success());
    let mut rdr = csv::Reader::from_path(dir.path().join("structure_constants.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["k", "l", "m", "value"]);
    let rows: Vec<(String, String, String, f64)> = rdr.deserialize().map(|r| r.unwrap()).collect();
    assert!(!rows.is_empty());
    for (k, l, m, v) in &rows {
        let partner = rows.iter().find(|r| &r.0 == l && &r.1 == k && &r.2 == m).expect("partner entry");
        assert_eq!(v + partner.3, 0.0);
    }
    assert!(dir.path().join("christoffel.csv").exists());
}

#[test]
fn invalid_settings_list_every_problem() {
    let dir = tempfile::tempdir().unwrap();
    let out = steuler(&["ensemble", "--beta", "2.5", "--paths", "0", "--out", &dir.path().display().to_string()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("beta > 3"), "{err}");
    assert!(err.contains("paths must be at least 1"), "{err}");
}

#[test]
fn config_file_and_env() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "n = 2\ndt = 0.01\nT = 0.05\npaths = 3\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_steuler"))
        .args(["ensemble", "--config", &cfg.display().to_string(), "--paths", "2"])
        .env("STEULER_OUT", dir.path().join("env_out"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = RunManifest::read(&dir.path().join("env_out/manifest.json")).unwrap();
    assert_eq!((m.settings.n, m.settings.paths), (2, 2));

    std::fs::write(&cfg, "n = 2\ndt = \n").unwrap();
    let out = steuler(&["run", "--config", &cfg.display().to_string()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn verify_reports_per_criterion() {
    let out = steuler(&["verify", "--suite", "noise", "--quick"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().any(|l| l.starts_with("A9 PASS")), "{text}");
}
