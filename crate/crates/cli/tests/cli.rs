use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_specocc"))
}

fn quick_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/quick.json")
}

fn run(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("binary runs");
    if !out.status.success() {
        eprintln!("{}", String::from_utf8_lossy(&out.stderr));
    }
    out
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

#[test]
fn compare_twice_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = quick_config();
    let cfg = cfg.to_str().unwrap();
    for dir in [&a, &b] {
        let out = run(&[
            "compare",
            "--config",
            cfg,
            "--days",
            "1",
            "--out-dir",
            dir.path().to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let fa = files(a.path());
    let fb = files(b.path());
    let names: Vec<&str> = fa.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(
        names,
        [
            "bin_occupancy.csv",
            "calibration.json",
            "comparison.csv",
            "occupancy_vs_threshold.csv",
            "outage.csv",
            "summary.csv",
            "tuning_history.csv"
        ]
    );
    assert_eq!(fa, fb);
}

#[test]
fn overrides_change_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config();
    let out = run(&[
        "compare",
        "--config",
        cfg.to_str().unwrap(),
        "--days",
        "1",
        "--classifiers",
        "nbc,dt",
        "--split",
        "0.3",
        "--seed",
        "3",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let comparison = std::fs::read_to_string(dir.path().join("comparison.csv")).unwrap();
    let rows: Vec<&str> = comparison.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("0,nbc,0.3,"));
    assert!(rows[1].starts_with("0,dt,0.3,"));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"days\": 1}").unwrap();
    let out = run(&["compare", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let missing = run(&["stats", "--config", "/nonexistent/config.json"]);
    assert_eq!(missing.status.code(), Some(2));
    let cfg = quick_config();
    let zero_days = run(&["compare", "--config", cfg.to_str().unwrap(), "--days", "0"]);
    assert_eq!(zero_days.status.code(), Some(2));
    let unknown = run(&[
        "compare",
        "--config",
        cfg.to_str().unwrap(),
        "--classifiers",
        "knn",
    ]);
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn runtime_failures_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let power = dir.path().join("flat.csv");
    let mut text = String::from("slot,bin_1,bin_2\n");
    for i in 0..1440 {
        text.push_str(&format!("{i},-50.0,-50.0\n"));
    }
    std::fs::write(&power, text).unwrap();
    let cfg = dir.path().join("flat.json");
    std::fs::write(&cfg, flat_config(&power, dir.path())).unwrap();
    let out = run(&["calibrate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

fn flat_config(power: &Path, out: &Path) -> String {
    format!(
        r#"{{"source": {{"type": "csv", "path": "{}"}},
            "band": {{"name": "flat", "f_start": 0.0, "f_stop": 2.0, "num_bins": 2, "bin_width": 1.0}},
            "days": 1, "output_dir": "{}"}}"#,
        power.display(),
        out.display()
    )
}

#[test]
fn generate_stats_calibrate_and_outage_write_their_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config();
    let base = [
        "--config",
        cfg.to_str().unwrap(),
        "--days",
        "1",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ];
    for cmd in ["generate", "stats", "calibrate"] {
        let mut args = vec![cmd];
        args.extend(base);
        assert!(run(&args).status.success(), "{cmd}");
    }
    let mut args = vec!["outage", "--classifiers", "nbc,hmm"];
    args.extend(base);
    assert!(run(&args).status.success());

    let power = std::fs::read_to_string(dir.path().join("power.csv")).unwrap();
    assert_eq!(power.lines().count(), 1 + 1440);
    assert!(power.starts_with("slot,bin_1,"));
    let truth = std::fs::read_to_string(dir.path().join("ground_truth.csv")).unwrap();
    assert_eq!(truth.lines().count(), 1 + 1440);
    let cdf = std::fs::read_to_string(dir.path().join("cdf.csv")).unwrap();
    assert!(cdf.trim_end().ends_with(",1.0"));
    let table = std::fs::read_to_string(dir.path().join("occupancy_vs_threshold.csv")).unwrap();
    assert!(table.starts_with("gamma_dbm,mean_occupancy\n"));
    let calibration = std::fs::read_to_string(dir.path().join("calibration.json")).unwrap();
    assert!(calibration.contains("\"chosen_gamma\""));
    let outage = std::fs::read_to_string(dir.path().join("outage.csv")).unwrap();
    assert!(outage.starts_with("day,classifier,expected_outage,evaluated_outage,abs_difference\n"));
    assert_eq!(outage.lines().count(), 3);
}

#[test]
fn generated_power_feeds_back_as_csv_source() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config();
    let d = dir.path().to_str().unwrap();
    assert!(run(&[
        "generate",
        "--config",
        cfg.to_str().unwrap(),
        "--days",
        "1",
        "--out-dir",
        d
    ])
    .status
    .success());
    let synthetic = dir.path().join("synthetic");
    let from_csv = dir.path().join("csv");
    let common = [
        "--days",
        "1",
        "--classifiers",
        "nbc,trained-hmm",
        "--split",
        "0.15",
    ];
    let mut args = vec![
        "compare",
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        synthetic.to_str().unwrap(),
    ];
    args.extend(common);
    assert!(run(&args).status.success());

    let csv_cfg = dir.path().join("csv.json");
    let text = std::fs::read_to_string(&cfg).unwrap();
    std::fs::write(
        &csv_cfg,
        with_csv_source(&text, &dir.path().join("power.csv")),
    )
    .unwrap();
    let mut args = vec![
        "compare",
        "--config",
        csv_cfg.to_str().unwrap(),
        "--out-dir",
        from_csv.to_str().unwrap(),
    ];
    args.extend(common);
    assert!(run(&args).status.success());
    assert_eq!(
        std::fs::read(synthetic.join("comparison.csv")).unwrap(),
        std::fs::read(from_csv.join("comparison.csv")).unwrap()
    );
}

/// Replaces the `source` block of a config with a CSV source.
fn with_csv_source(text: &str, path: &Path) -> String {
    let start = text.find("\"source\"").unwrap();
    let end = text.find("\"band\"").unwrap();
    let mut out = text.to_string();
    out.replace_range(
        start..end,
        &format!(
            "\"source\": {{\"type\": \"csv\", \"path\": \"{}\"}},\n  ",
            path.display()
        ),
    );
    out
}
