use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_countmon"));
    cmd.env_remove("COUNTMON_QUANTILE_CACHE");
    cmd
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("failed to spawn countmon")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("terminated by signal")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// Counts from a small deterministic recursion, enough for a stable fit.
fn counts_csv(dir: &Path, n: usize) -> PathBuf {
    let mut text = String::from("day,count\n");
    let mut state: u64 = 0x2545F4914F6CDD1D;
    for t in 0..n {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        let y = 1 + (state % 5) + if t % 7 == 0 { 2 } else { 0 };
        text.push_str(&format!("d{t},{y}\n"));
    }
    write(dir, "counts.csv", &text)
}

const ONE_SCENARIO: &str = r#"
[experiment]
replications = 2
ms = [200]

[[experiment.scenarios]]
id = "s1"
theta0 = [1.0, 0.2, 0.15]
theta1 = [1.0, 0.2, 0.5]
"#;

#[test]
fn unknown_config_key_exits_2() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "bad.toml", "sede = 1\n");
    let out = run(bin().args(["table1", "--config"]).arg(&cfg));
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).contains("sede"));
}

#[test]
fn invalid_values_exit_2() {
    let dir = TempDir::new().unwrap();
    let csv = counts_csv(dir.path(), 50);
    let cases: Vec<Vec<&str>> = vec![
        vec!["table1", "--replications", "0"],
        vec![
            "quantiles",
            "--alpha",
            "1.5",
            "--quantile-replications",
            "1000",
        ],
        vec!["quantiles", "--quantile-replications", "10"],
        vec!["fit", "--q", "0"],
        vec![
            "monitor",
            "--m",
            "20",
            "--horizon",
            "0.5",
            "--c-alpha",
            "1.7",
        ],
    ];
    for args in cases {
        let mut cmd = bin();
        cmd.args(&args);
        if matches!(args[0], "fit" | "monitor") {
            cmd.arg("--input").arg(&csv);
        }
        let out = run(&mut cmd);
        assert_eq!(code(&out), 2, "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn missing_config_file_exits_2() {
    let out = run(bin().args(["table1", "--config", "/nonexistent/run.toml"]));
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn malformed_counts_exit_3() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("fractional.csv", "count\n1\n2.5\n3\n"),
        ("negative.csv", "1\n-2\n3\n"),
        ("empty.csv", "count\n"),
    ];
    for (name, text) in cases {
        let p = write(dir.path(), name, text);
        let out = run(bin().arg("fit").arg("--input").arg(&p));
        assert_eq!(code(&out), 3, "{name}: {}", stderr(&out));
    }
    let out = run(bin().args(["fit", "--input", "/nonexistent/counts.csv"]));
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn series_too_short_to_monitor_exits_3() {
    let dir = TempDir::new().unwrap();
    let csv = counts_csv(dir.path(), 100);
    let out = run(bin()
        .args(["monitor", "--m", "200", "--c-alpha", "1.7", "--input"])
        .arg(&csv));
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn fit_prints_estimates() {
    let dir = TempDir::new().unwrap();
    let csv = counts_csv(dir.path(), 300);
    let out = run(bin().arg("fit").arg("--input").arg(&csv));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("parameter,estimate,std_error"));
    let names: Vec<&str> = lines
        .take(3)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(names, ["alpha0", "alpha1", "beta1"]);
}

#[test]
fn fit_honours_delimiter_and_window() {
    let dir = TempDir::new().unwrap();
    let csv = counts_csv(dir.path(), 300);
    let table = dir.path().join("fit.tsv");
    let out = run(bin()
        .args([
            "--delimiter",
            "\t",
            "fit",
            "--start",
            "1",
            "--end",
            "150",
            "-o",
        ])
        .arg(&table)
        .arg("--input")
        .arg(&csv));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = std::fs::read_to_string(&table).unwrap();
    assert!(text.starts_with("parameter\testimate\tstd_error\n"));
    let sidecar: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fit.tsv.json")).unwrap())
            .unwrap();
    assert_eq!(sidecar["command"], "fit");
    assert_eq!(sidecar["config"]["window"]["end"], 150);
}

#[test]
fn quantile_cache_from_env_var_is_reused() {
    let dir = TempDir::new().unwrap();
    let cache = dir.path().join("cache.jsonl");
    let args = [
        "quantiles",
        "--d",
        "3",
        "--quantile-replications",
        "1000",
        "--points-per-unit",
        "200",
        "-o",
    ];
    let first = dir.path().join("q1.csv");
    let second = dir.path().join("q2.csv");
    for table in [&first, &second] {
        let out = run(bin()
            .env("COUNTMON_QUANTILE_CACHE", &cache)
            .args(args)
            .arg(table));
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    let lines = std::fs::read_to_string(&cache).unwrap();
    assert_eq!(lines.lines().count(), 1);
    let side = |p: &Path| -> Value {
        let s = std::fs::read_to_string(p.with_extension("csv.json")).unwrap();
        serde_json::from_str(&s).unwrap()
    };
    assert_eq!(side(&first)["results"][0]["from_cache"], false);
    assert_eq!(side(&second)["results"][0]["from_cache"], true);
    assert_eq!(
        std::fs::read_to_string(&first).unwrap(),
        std::fs::read_to_string(&second).unwrap()
    );
}

#[test]
fn quantile_cache_flag_overrides_env() {
    let dir = TempDir::new().unwrap();
    let env_cache = dir.path().join("env.jsonl");
    let flag_cache = dir.path().join("flag.jsonl");
    let out = run(bin()
        .env("COUNTMON_QUANTILE_CACHE", &env_cache)
        .arg("--quantile-cache")
        .arg(&flag_cache)
        .args([
            "quantiles",
            "--d",
            "1",
            "--quantile-replications",
            "1000",
            "--points-per-unit",
            "100",
        ]));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(flag_cache.exists());
    assert!(!env_cache.exists());
}

#[test]
fn table1_is_deterministic_with_golden_header() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "run.toml", ONE_SCENARIO);
    let mut outputs = Vec::new();
    let table = dir.path().join("t1.csv");
    for _ in 0..2 {
        let out = run(bin()
            .arg("--config")
            .arg(&cfg)
            .args(["table1", "--c-alpha", "1.74", "-o"])
            .arg(&table));
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        let sidecar = std::fs::read(dir.path().join("t1.csv.json")).unwrap();
        outputs.push((std::fs::read_to_string(&table).unwrap(), sidecar));
    }
    let (table, sidecar) = &outputs[0];
    assert_eq!(outputs[0].0, outputs[1].0);
    assert_eq!(outputs[0].1, outputs[1].1);

    let mut lines = table.lines();
    assert_eq!(
        lines.next(),
        Some("scenario,m,k_star,hypothesis,replications,failures,detections,rate,flagged_fits,c_alpha")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][..4], ["s1", "200", "", "H0"]);
    assert_eq!(&rows[1][..4], ["s1", "200", "250", "H1"]);

    let doc: Value = serde_json::from_slice(sidecar).unwrap();
    assert_eq!(doc["config"]["seed"], 20240601);
    assert!(doc["environment"]["version"].is_string());
    let text = String::from_utf8_lossy(sidecar);
    assert!(!text.contains("time"), "sidecar must not carry timestamps");
}

#[test]
fn seed_flag_changes_results_and_is_recorded() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "run.toml", ONE_SCENARIO);
    let table = dir.path().join("t.csv");
    let out = run(bin()
        .arg("--config")
        .arg(&cfg)
        .args([
            "--seed",
            "99",
            "table1",
            "--c-alpha",
            "1.74",
            "--replications",
            "1",
        ])
        .arg("-o")
        .arg(&table));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("t.csv.json")).unwrap())
            .unwrap();
    assert_eq!(doc["config"]["seed"], 99);
    assert_eq!(doc["config"]["replications"], 1);
}

#[test]
fn table2_header_and_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "run.toml", ONE_SCENARIO);
    let out = run(bin().arg("--config").arg(&cfg).args([
        "--delimiter",
        ";",
        "table2",
        "--c-alpha",
        "1.74",
    ]));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("scenario;m;k_star;detections;mean;sd;min;q1;median;q3;max;note")
    );
    let row: Vec<&str> = lines.next().unwrap().split(';').collect();
    assert_eq!(&row[..3], ["s1", "200", "250"]);
}

#[test]
fn detector_plot_round_trips_through_reader() {
    let dir = TempDir::new().unwrap();
    let table = dir.path().join("series.csv");
    let out = run(bin()
        .args([
            "detector-plot",
            "--scenario",
            "s1",
            "--m",
            "200",
            "--c-alpha",
            "1.74",
        ])
        .arg("-o")
        .arg(&table));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = countmon::read_detector_series(&table, b',').unwrap();
    assert!(!rows.is_empty());
    assert_eq!(rows[0].k, 201);
    assert!(rows.iter().all(|r| r.threshold == 1.74));
    let changes: Vec<usize> = rows.iter().filter(|r| r.is_change).map(|r| r.k).collect();
    assert_eq!(changes, [250]);
    let stops = rows.iter().filter(|r| r.is_stop).count();
    assert!(stops <= 1);
    if stops == 1 {
        let last = rows.last().unwrap();
        assert!(last.is_stop && last.statistic > last.threshold);
    }
}

#[test]
fn detector_plot_from_file() {
    let dir = TempDir::new().unwrap();
    let csv = counts_csv(dir.path(), 320);
    let out = run(bin()
        .args([
            "detector-plot",
            "--m",
            "200",
            "--c-alpha",
            "1.74",
            "--input",
        ])
        .arg(&csv));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("k,raw_max,statistic,threshold,change,stop\n"));
    assert!(text.lines().count() > 1);
}

#[test]
fn monitor_reports_stopping_time() {
    let dir = TempDir::new().unwrap();
    let csv = counts_csv(dir.path(), 300);
    let out = run(bin()
        .args(["monitor", "--m", "200", "--c-alpha", "0.0001", "--input"])
        .arg(&csv));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(
        stderr(&out).contains("change detected at k = 201"),
        "{}",
        stderr(&out)
    );
}
