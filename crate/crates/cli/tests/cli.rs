use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn randbq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_randbq"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn fixed<'a>(out: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![
        "--sigma-f2",
        "0.5",
        "--ell",
        "0.8",
        "--workers",
        "2",
        "-o",
        out,
    ];
    v.extend_from_slice(extra);
    v
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn run_writes_versioned_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let mut args = vec!["run", "--experiment", "matern-gaussian", "--n-grid", "8,16"];
    args.extend(fixed(out, &[]));
    let o = randbq(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = read(dir.path(), "matern-gaussian_trace.csv");
    let mut lines = trace.lines();
    let head = lines.next().unwrap();
    assert!(head.starts_with("# randbq-csv v1 experiment=matern-gaussian config="));
    assert!(head.ends_with("rng=ChaCha8"));
    assert!(lines
        .next()
        .unwrap()
        .starts_with("# hypers sigma_f2=0.5 ell=0.8"));
    assert_eq!(
        lines.next().unwrap(),
        "repetition,strategy,n,posterior_mean,posterior_var,wce,radius,fill"
    );
    assert_eq!(lines.count(), 4);
    assert!(dir.path().join("matern-gaussian_summary.csv").exists());
}

#[test]
fn repeat_smoke_has_one_row_per_repetition() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let mut args = vec!["repeat", "--n", "12", "-R", "2", "--strategies", "inflated"];
    args.extend(fixed(out, &[]));
    let o = randbq(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = read(dir.path(), "rbf-gaussian_trace.csv");
    let rows: Vec<&str> = trace
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("0,inflated,12,"));
    assert!(rows[1].starts_with("1,inflated,12,"));
    let summary = read(dir.path(), "rbf-gaussian_summary.csv");
    assert!(summary
        .lines()
        .last()
        .unwrap()
        .starts_with("inflated,12,2,"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(
        &cfg,
        r#"{"experiment":"appendix-b","seed":5,"repetitions":3}"#,
    )
    .unwrap();
    let o = randbq(&[
        "repeat",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "11",
        "--print-config",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["experiment"], "appendix-b");
    assert_eq!(v["seed"], 11);
    assert_eq!(v["repetitions"], 3);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(randbq(&["run", "--n", "abc"]).status.code(), Some(2));
    assert_eq!(randbq(&["run", "--frobnicate"]).status.code(), Some(2));
    assert_eq!(randbq(&["launch"]).status.code(), Some(2));
    assert_eq!(randbq(&["run", "--n-grid", "16,8"]).status.code(), Some(2));
    assert_eq!(
        randbq(&["rates", "--burn-in", "5000"]).status.code(),
        Some(2)
    );
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"sede":1}"#).unwrap();
    assert_eq!(
        randbq(&["run", "--config", cfg.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn runtime_errors_exit_with_one() {
    // the output "directory" is an existing regular file
    let file = tempfile::NamedTempFile::new().unwrap();
    let out = file.path().to_str().unwrap();
    let mut args = vec!["run", "--n", "8"];
    args.extend(fixed(out, &[]));
    let o = randbq(&args);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn fill_and_mcmc_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = randbq(&[
        "fill",
        "--n-grid",
        "32,64,128",
        "-R",
        "5",
        "--concentration-trials",
        "20",
        "-o",
        out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["trace", "summary", "fit", "concentration"] {
        assert!(dir.path().join(format!("fill-study_{f}.csv")).exists());
    }
    let o = randbq(&[
        "mcmc",
        "--iterations",
        "120",
        "--burn-in",
        "20",
        "--pilot-n",
        "30",
        "-o",
        out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = read(dir.path(), "mcmc-hypers_trace.csv");
    assert_eq!(trace.lines().nth(1), Some("iter,sigma_f2,ell,accepted"));
    assert_eq!(trace.lines().count(), 2 + 120);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, workers) in [(&a, "1"), (&b, "3")] {
        let o = randbq(&[
            "repeat",
            "--experiment",
            "matern-gaussian",
            "--n-grid",
            "10,20",
            "-R",
            "4",
            "--iterations",
            "150",
            "--burn-in",
            "50",
            "--workers",
            workers,
            "-o",
            dir.path().to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["matern-gaussian_trace.csv", "matern-gaussian_summary.csv"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}
