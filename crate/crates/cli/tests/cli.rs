use std::path::Path;
use std::process::{Command, Output};

fn vecm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vecm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn simulate(dir: &Path, seed: &str, independent: bool) -> String {
    let mut args = vec!["simulate", "--out", dir.to_str().unwrap(), "--seed", seed];
    if independent {
        args.push("--independent");
    }
    let o = vecm(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    dir.join("config.toml").to_str().unwrap().to_string()
}

fn files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

#[test]
fn validate_accepts_simulated_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = simulate(dir.path(), "3", false);
    let o = vecm(&["validate", "--config", &config]);
    assert_eq!(o.status.code(), Some(0));
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains("A: aggregate"));
    assert!(out.contains("5 variables, 199 months"));
}

#[test]
fn run_writes_reports_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = simulate(dir.path(), "3", false);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = vecm(&["run", "--config", &config, "--out", out.to_str().unwrap(), "--format", "csv"]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let names = files(&a);
    assert!(names.iter().all(|n| !n.ends_with(".svg")));
    assert!(names.contains(&"synthetic_table2.csv".to_string()));
    assert!(names.contains(&"synthetic_irf_EAPYR.csv".to_string()));
    assert_eq!(names, files(&b));
    for n in &names {
        assert_eq!(std::fs::read(a.join(n)).unwrap(), std::fs::read(b.join(n)).unwrap(), "{n}");
    }
}

#[test]
fn seed_and_ordering_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = simulate(dir.path(), "3", false);
    let out = dir.path().join("o");
    let o = vecm(&[
        "run", "--config", &config, "--out", out.to_str().unwrap(), "--format", "csv",
        "--ordering", "A,E,P,Y,R", "--seed", "11", "--draws", "150",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("synthetic_irf_AEPYR.csv").exists());
    let s = std::fs::read_to_string(out.join("synthetic_summary.txt")).unwrap();
    assert!(s.contains("seed 11  draws 150"), "{s}");
}

#[test]
fn irf_reruns_from_saved_model() {
    let dir = tempfile::tempdir().unwrap();
    let config = simulate(dir.path(), "3", false);
    let out = dir.path().join("run");
    let o = vecm(&["run", "--config", &config, "--out", out.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let model = out.join("synthetic_model.txt");
    let irf_dir = dir.path().join("irf");
    let args = [
        "irf", "--model", model.to_str().unwrap(), "--ordering", "E,A,Y,P,R", "--draws", "200",
        "--horizons", "12", "--out", irf_dir.to_str().unwrap(), "--format", "both",
    ];
    let o = vecm(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let names = files(&irf_dir);
    assert_eq!(names.iter().filter(|n| n.ends_with(".svg")).count(), 15);
    let first = std::fs::read(irf_dir.join("irf_EAYPR.csv")).unwrap();
    assert_eq!(vecm(&args).status.code(), Some(0));
    assert_eq!(std::fs::read(irf_dir.join("irf_EAYPR.csv")).unwrap(), first);
}

#[test]
fn rank_zero_exits_with_statistical_code() {
    let dir = tempfile::tempdir().unwrap();
    let config = simulate(dir.path(), "5", true);
    let out = dir.path().join("o");
    let o = vecm(&["run", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rank 0"));
    assert!(out.join("synthetic_table2.csv").exists());
    assert!(!out.join("synthetic_model.txt").exists());
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = simulate(dir.path(), "3", false);
    let o = vecm(&["run", "--config", &config, "--ordering", "E,A,P,Y"]);
    assert_eq!(o.status.code(), Some(1));
    std::fs::remove_file(dir.path().join("Y.csv")).unwrap();
    assert_eq!(vecm(&["validate", "--config", &config]).status.code(), Some(3));
    let text = std::fs::read_to_string(&config).unwrap().replace("draws = 100", "draws = 10");
    std::fs::write(&config, text).unwrap();
    assert_eq!(vecm(&["validate", "--config", &config]).status.code(), Some(1));
}

#[test]
fn missing_config_exits_three() {
    let o = vecm(&["validate", "--config", "/nonexistent/config.toml"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/config.toml"));
}
