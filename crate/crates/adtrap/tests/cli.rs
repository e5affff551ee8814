use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

fn adtrap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adtrap"))
        .args(args)
        .env_remove("ADTRAP_LOG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_bundled_fixtures() {
    for name in [
        "table2_experiment.json",
        "empty_scenario.json",
        "two_visitor_ambiguity.json",
        "per_victim_bypass.json",
        "perturbation.json",
        "group_statistics.json",
        "rival_bid_sweep.json",
    ] {
        let o = adtrap(&["validate", path(&fixture(name))]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
        assert!(stdout(&o).contains("valid"));
    }
}

#[test]
fn validate_reports_pointer_of_dangling_audience() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(fixture("table2_experiment.json")).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["attack"]["audiences_to_probe"][3] = "x9".into();
    let file = dir.path().join("bad.json");
    fs::write(&file, serde_json::to_string(&doc).unwrap()).unwrap();
    let o = adtrap(&["validate", path(&file)]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(
        err.contains("bad.json") && err.contains("/attack/audiences_to_probe/3"),
        "{err}"
    );
}

#[test]
fn validate_reports_schema_errors() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("schema.json");
    fs::write(&file, r#"{"spec_version": 1, "horizon_s": "soon"}"#).unwrap();
    let o = adtrap(&["validate", path(&file)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/horizon_s"), "{}", stderr(&o));
}

#[test]
fn missing_file_fails() {
    let o = adtrap(&["validate", "/definitely/not/here.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/definitely/not/here.json"));
}

#[test]
fn run_prints_summary_lines() {
    let cases = [
        (
            "table2_experiment.json",
            "exact=10 ambiguous=0 unknown=0 accuracy=1.0",
        ),
        (
            "empty_scenario.json",
            "exact=0 ambiguous=0 unknown=0 accuracy=undefined",
        ),
        (
            "two_visitor_ambiguity.json",
            "exact=2 ambiguous=0 unknown=0 accuracy=1.0",
        ),
    ];
    for (name, line) in cases {
        let o = adtrap(&["run", path(&fixture(name))]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert_eq!(stdout(&o).trim(), line, "{name}");
    }
}

#[test]
fn run_artifacts_are_complete_and_stable() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let file = fixture("table2_experiment.json");
    let first = adtrap(&["run", path(&file), "--out", path(&out)]);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("run_output.json")).unwrap()).unwrap();
    let names: Vec<&str> = summary["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    for n in &names {
        assert!(out.join(n).is_file(), "{n} missing");
    }
    for n in [
        "trace.json",
        "impressions.csv",
        "reports_trap-monads.csv",
        "log_monads.csv",
        "attribution.csv",
    ] {
        assert!(names.contains(&n), "{n} not listed");
    }

    let snapshot: Vec<(String, Vec<u8>)> = names
        .iter()
        .map(|n| (n.to_string(), fs::read(out.join(n)).unwrap()))
        .collect();
    let second = adtrap(&["run", path(&file), "--out", path(&out)]);
    assert_eq!(second.status.code(), Some(0));
    for (n, bytes) in snapshot {
        assert_eq!(fs::read(out.join(&n)).unwrap(), bytes, "{n} changed");
    }

    let attribution = fs::read_to_string(out.join("attribution.csv")).unwrap();
    assert!(attribution
        .starts_with("network_id,status,audience_or_set,ground_truth_audience,correct\n"));
    assert_eq!(attribution.lines().count(), 11);
    assert!(!attribution.contains('\r'));
    let log = fs::read_to_string(out.join("log_monads.csv")).unwrap();
    assert!(log.starts_with("timestamp,network_id,page_id,referral,tracking_arg\n"));
    assert!(!log.contains("cookie"));
    let reports = fs::read_to_string(out.join("reports_trap-monads.csv")).unwrap();
    assert!(
        reports.starts_with("window_index,window_start,window_end,audience_id,delta,cumulative\n")
    );
}

#[test]
fn seed_flag_overrides_scenario_seed() {
    let dir = tempfile::tempdir().unwrap();
    let o = adtrap(&[
        "run",
        path(&fixture("two_visitor_ambiguity.json")),
        "--seed",
        "99",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let trace: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("trace.json")).unwrap()).unwrap();
    assert_eq!(trace["seed"], 99);
    assert_eq!(trace["schema_version"], 1);
    for key in ["impressions", "reports", "logs", "ground_truth"] {
        assert!(trace.get(key).is_some(), "{key}");
    }
}

#[test]
fn sweep_window_lengths_by_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let o = adtrap(&[
        "sweep",
        path(&fixture("table2_experiment.json")),
        "--grid",
        "window_length=300,1800,7200",
        "--seeds",
        "1,2,3,4,5",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("cell,seed,window_length,"));
    assert_eq!(lines.count(), 15);
}

#[test]
fn sweep_rejects_bad_input() {
    let file = fixture("table2_experiment.json");
    let o = adtrap(&[
        "sweep",
        path(&file),
        "--grid",
        "window_length=300",
        "--seeds",
        "",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no seeds"));
    let o = adtrap(&["sweep", path(&file), "--grid", "colour=1,2", "--seeds", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("colour"));
}

#[test]
fn rival_bid_sweep_accuracy_never_recovers() {
    let dir = tempfile::tempdir().unwrap();
    let o = adtrap(&[
        "sweep",
        path(&fixture("rival_bid_sweep.json")),
        "--grid",
        "rival_bid=0,10,49,50,51,100",
        "--seeds",
        "1,2",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut reader = csv::Reader::from_path(dir.path().join("sweep.csv")).unwrap();
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (seed, bid, acc) = (col("seed"), col("rival_bid"), col("accuracy"));
    let mut by_seed: std::collections::BTreeMap<String, Vec<(f64, f64)>> = Default::default();
    for rec in reader.records() {
        let rec = rec.unwrap();
        by_seed
            .entry(rec[seed].to_string())
            .or_default()
            .push((rec[bid].parse().unwrap(), rec[acc].parse().unwrap()));
    }
    for rows in by_seed.values() {
        assert!(
            rows.windows(2).all(|w| w[0].0 < w[1].0 && w[1].1 <= w[0].1),
            "{rows:?}"
        );
        assert_eq!(rows.first().unwrap().1, 1.0);
        assert_eq!(rows.last().unwrap().1, 0.0);
    }
}

#[test]
fn bundled_taxonomy_matches_experiment() {
    let taxonomy: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(fixture("table1_taxonomy.json")).unwrap())
            .unwrap();
    let scenario: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(fixture("table2_experiment.json")).unwrap())
            .unwrap();
    assert_eq!(taxonomy, scenario["taxonomy"]);
}
