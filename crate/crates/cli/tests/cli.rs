use std::path::Path;
use std::process::Output;

use assert_cmd::Command;
use serde_json::Value;

fn tauberlab(cache: &Path) -> Command {
    let mut cmd = Command::cargo_bin("tauberlab").unwrap();
    cmd.env("TAUBERLAB_CACHE_DIR", cache).env_remove("RUST_LOG");
    cmd
}

fn run(cache: &Path, args: &[&str]) -> Output {
    tauberlab(cache).args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

/// The single JSON line on stderr.
fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1, "{text}");
    serde_json::from_str(lines[0]).unwrap()
}

fn trial_division_count(n: u64) -> u64 {
    (2..=n).filter(|&k| (2..).take_while(|d| d * d <= k).all(|d| k % d != 0)).count() as u64
}

#[test]
fn zeta_at_two() {
    let dir = tempfile::tempdir().unwrap();
    let v = stdout_json(&run(dir.path(), &["special", "eval", "--fn", "zeta", "--sigma", "2", "--t", "0"]));
    let basel = std::f64::consts::PI.powi(2) / 6.0;
    assert!((v["re"].as_f64().unwrap() - basel).abs() < 1e-12);
    assert!((v["re"].as_f64().unwrap() - 1.6449340668).abs() < 1e-10);
    assert_eq!(v["im"].as_f64().unwrap(), 0.0);
    assert!(v["est_error"].as_f64().unwrap() < 1e-9);
}

#[test]
fn every_special_function_evaluates() {
    let dir = tempfile::tempdir().unwrap();
    for f in ["zeta", "zetad", "pzeta", "pzetad", "psi", "psip"] {
        let v = stdout_json(&run(dir.path(), &["special", "eval", "--fn", f, "--sigma", "1.5", "--t", "-4"]));
        assert!(v["re"].as_f64().unwrap().is_finite() && v["im"].as_f64().unwrap().is_finite(), "{f}");
    }
}

#[test]
fn prime_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["primes", "--count", "100"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "25");
    for n in [2u64, 10, 997, 5000] {
        let out = run(dir.path(), &["primes", "--count", &n.to_string()]);
        assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), trial_division_count(n).to_string());
    }
}

#[test]
fn insufficient_table_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["--prime-limit", "100000", "experiment", "pnt", "--umax", "14"]);
    assert_eq!(out.status.code(), Some(2));
    let e = stderr_json(&out);
    assert_eq!(e["code"], "table_exhausted");
    assert!(e["message"].as_str().unwrap().contains("exhausted"));
    assert!(out.stdout.is_empty());
}

#[test]
fn usage_and_domain_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["frobnicate"]).status.code(), Some(64));
    assert_eq!(run(dir.path(), &["special", "eval", "--fn", "zeta"]).status.code(), Some(64));
    assert_eq!(run(dir.path(), &["--help"]).status.code(), Some(0));

    let out = run(dir.path(), &["special", "eval", "--fn", "zeta", "--sigma", "0.5", "--t", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["code"], "domain");

    let out = run(dir.path(), &["experiment", "forward", "--source", "oscillating"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["code"], "contract");

    let out = run(dir.path(), &["operator", "assemble", "--route", "kernel", "--eps", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_errors_name_line_and_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");

    std::fs::write(&cfg, "# ok\nlength = 10\nnot a pair\n").unwrap();
    let out = run(dir.path(), &["--config", cfg.to_str().unwrap(), "primes", "--count", "10"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_json(&out)["message"].as_str().unwrap().contains("line 3"));

    std::fs::write(&cfg, "prime_limit = -5\n").unwrap();
    let out = run(dir.path(), &["--config", cfg.to_str().unwrap(), "primes", "--count", "10"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_json(&out)["message"].as_str().unwrap().contains("prime_limit"));

    std::fs::write(&cfg, "colour = blue\n").unwrap();
    let out = run(dir.path(), &["--config", cfg.to_str().unwrap(), "primes", "--count", "10"]);
    assert!(stderr_json(&out)["message"].as_str().unwrap().contains("colour"));
}

#[test]
fn report_echoes_effective_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "length = 20\nu_max = 16\ndecay_threshold = 0.03\nepsilon_schedule = 0.2, 0.1\n").unwrap();
    let report = dir.path().join("out/forward.json");
    let out = run(
        dir.path(),
        &[
            "--config",
            cfg.to_str().unwrap(),
            "experiment",
            "forward",
            "--source",
            "x+sqrt",
            "--order",
            "64",
            "--length",
            "25.132741228718345",
            "--report",
            report.to_str().unwrap(),
        ],
    );
    let summary = stdout_json(&out);
    assert_eq!(summary["diag_decay"], true);

    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["schema"], "tauberlab/1");
    assert_eq!(r["tool_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(r["order"], 64);
    assert_eq!(r["u_max"], 16.0);
    assert_eq!(r["config"]["length"], 25.132741228718345);
    assert_eq!(r["config"]["decay_threshold"], 0.03);
    assert_eq!(r["config"]["epsilon_schedule"], serde_json::json!([0.2, 0.1]));
    assert_eq!(r["verdicts"]["diag_decay"]["threshold"], 0.03);
    assert_eq!(r["weak_limit"]["epsilons"], serde_json::json!([0.2, 0.1]));

    let ratios = std::fs::read_to_string(report.with_extension("ratios.csv")).unwrap();
    assert!(ratios.starts_with("u,g\n"));
    assert_eq!(ratios.lines().count(), 41);
    let diag = std::fs::read_to_string(report.with_extension("diagonal.csv")).unwrap();
    assert!(diag.starts_with("n,psi_diag,tail_bound\n"));
}

#[test]
fn matrix_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "--format",
            "csv",
            "operator",
            "assemble",
            "--source",
            "integers",
            "--length",
            "6.283185307179586",
            "--order",
            "3",
        ],
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "# tauberlab-matrix v1, L=6.283185307179586, eps=0.1, N=3, source=pi_N, route=frequency_formula, A=0"
    );
    assert_eq!(lines[1], "# rows m = -3..3, columns n = -3..3, entry <W e_n, e_m>");
    assert_eq!(lines.len(), 2 + 7);
    let rows: Vec<Vec<f64>> = lines[2..].iter().map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert!(rows.iter().all(|r| r.len() == 7));
    for (i, r) in rows.iter().enumerate() {
        for (j, v) in r.iter().enumerate() {
            assert_eq!(*v, rows[j][i]);
        }
    }
}

#[test]
fn routes_agree_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let entries = |route: &str| {
        let v = stdout_json(&run(
            dir.path(),
            &["operator", "assemble", "--length", "6.283185307179586", "--order", "4", "--route", route],
        ));
        v["entries"]
            .as_array()
            .unwrap()
            .iter()
            .flat_map(|r| r.as_array().unwrap().clone())
            .map(|x| x.as_f64().unwrap())
            .collect::<Vec<_>>()
    };
    let (k, f) = (entries("kernel"), entries("frequency"));
    assert!(k.iter().zip(&f).all(|(a, b)| (a - b).abs() < 1e-5));
}

#[test]
fn diag_and_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let v = stdout_json(&run(dir.path(), &["operator", "diag", "--source", "x", "--eps", "0", "--order", "8"]));
    assert_eq!(v["constant"], 1.0);
    assert!(v["values"].as_array().unwrap().iter().all(|x| x.as_f64().unwrap().abs() < 1e-12));

    let v = stdout_json(&run(dir.path(), &["operator", "spectrum", "--order", "6", "--count", "4"]));
    let ev: Vec<f64> = v["eigenvalues"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(ev.len(), 4);
    assert!(ev.windows(2).all(|w| w[0].abs() >= w[1].abs()));
    assert!(ev.iter().all(|&x| x > 0.0));
}

#[test]
fn transform_with_quadrature_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let v = stdout_json(&run(
        dir.path(),
        &["transform", "eval", "--source", "integers", "--sigma", "2", "--t", "1", "--oracle", "quadrature"],
    ));
    assert_eq!(v["kind"], "closed_form_integers");
    let oracle = &v["oracle"];
    assert!(oracle["difference"].as_f64().unwrap() <= oracle["est_error"].as_f64().unwrap() + 1e-8);
    assert!(oracle["difference"].as_f64().unwrap() < 1e-6);
}

#[test]
fn step_function_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("step.csv");
    std::fs::write(&csv, "# x, a\n2, 1\n5, 2\n").unwrap();
    let v = stdout_json(&run(
        dir.path(),
        &["transform", "eval", "--source", "file", "--file", csv.to_str().unwrap(), "--sigma", "1.5", "--t", "0"],
    ));
    let expected = 2f64.powf(-1.5) / 1.5 + 2.0 * 5f64.powf(-1.5) / 1.5;
    assert!((v["re"].as_f64().unwrap() - expected).abs() < 1e-12);

    let out = run(dir.path(), &["transform", "eval", "--source", "file", "--sigma", "1.5", "--t", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let assemble = ["--format", "csv", "operator", "assemble", "--route", "kernel", "--order", "6", "--eps", "0.05"];
    let a = run(dir.path(), &assemble);
    let b = run(dir.path(), &["--jobs", "1"].iter().chain(&assemble).copied().collect::<Vec<_>>());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);

    let mut csvs = Vec::new();
    for k in 0..2 {
        let report = dir.path().join(format!("run{k}.json"));
        let out = run(
            dir.path(),
            &["experiment", "converse", "--source", "x+sqrt", "--order", "16", "--report", report.to_str().unwrap()],
        );
        assert!(out.status.success());
        csvs.push((
            std::fs::read(report.with_extension("ratios.csv")).unwrap(),
            std::fs::read(report.with_extension("diagonal.csv")).unwrap(),
        ));
    }
    assert_eq!(csvs[0], csvs[1]);
}
