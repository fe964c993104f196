// SPDX-License-Identifier: MIT OR Apache-2.0

mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::lower_hull;
use crops_core::costs::{CostModel, TimeSeries};
use crops_core::solvers::solve_sn;
use serde_json::Value;

fn crops_bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crops"))
        .args(args)
        .env("CROPS_LOG", "error")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn read_values(p: &Path) -> Vec<f64> {
    std::fs::read_to_string(p)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.parse().unwrap())
        .collect()
}

#[test]
fn constant_input_gives_one_interval() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("flat.csv");
    std::fs::write(&input, "5\n".repeat(40)).unwrap();
    let out = dir.path().join("out");
    let res = crops_bin(&["crops", "-i", path(&input), "--beta-min", "1", "--beta-max", "10", "-o", path(&out)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let report = read_json(&out.join("intervals.json"));
    assert_eq!(report["schema_version"], 1);
    let intervals = report["intervals"].as_array().unwrap();
    assert_eq!(intervals.len(), 1);
    assert_eq!(intervals[0]["m"], 0);
    for f in ["elbow.csv", "lines.csv", "audit.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn simulated_fixed_series_recovers_ten_changepoints() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("series.csv");
    let truth = dir.path().join("truth.json");
    let res = crops_bin(&[
        "simulate", "-n", "1000", "--regime", "fixed", "--seed", "4", "-o", path(&series), "--truth", path(&truth),
    ]);
    assert!(res.status.success());
    assert_eq!(read_json(&truth)["changepoints"].as_array().unwrap().len(), 10);

    let out = dir.path().join("out");
    let res = crops_bin(&["crops", "-i", path(&series), "--beta-min", "2", "--beta-max", "60", "-o", path(&out)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let report = read_json(&out.join("intervals.json"));
    let got: Vec<(usize, f64)> = report["intervals"]
        .as_array()
        .unwrap()
        .iter()
        .rev()
        .map(|i| (i["m"].as_u64().unwrap() as usize, i["cost"].as_f64().unwrap()))
        .collect();
    assert!(got.iter().any(|p| p.0 == 10), "{got:?}");

    // the recovered counts are the lower hull of the SN costs read from the same file
    let ts = TimeSeries::new(read_values(&series)).unwrap();
    let (m_lo, m_hi) = (got[0].0, got.last().unwrap().0);
    let sn = solve_sn(&ts, &CostModel::mean_variance(), m_hi).unwrap();
    let points: Vec<(usize, f64)> = sn[m_lo..=m_hi].iter().map(|s| (s.num_changepoints(), s.cost())).collect();
    let hull = lower_hull(&points, 1e-8);
    assert_eq!(got.iter().map(|p| p.0).collect::<Vec<_>>(), hull.iter().map(|p| p.0).collect::<Vec<_>>());
    for (a, b) in got.iter().zip(&hull) {
        assert!((a.1 - b.1).abs() < 1e-8 * b.1.abs().max(1.0));
    }
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("series.csv");
    assert!(crops_bin(&["simulate", "-n", "600", "--seed", "9", "-o", path(&series)]).status.success());
    let mut runs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("out{k}"));
        assert!(crops_bin(&["crops", "-i", path(&series), "-o", path(&out)]).status.success());
        runs.push(out);
    }
    for f in ["intervals.json", "elbow.csv", "lines.csv"] {
        let a = std::fs::read(runs[0].join(f)).unwrap();
        let b = std::fs::read(runs[1].join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    let again = dir.path().join("again.csv");
    assert!(crops_bin(&["simulate", "-n", "600", "--seed", "9", "-o", path(&again)]).status.success());
    assert_eq!(std::fs::read(&series).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn simulated_values_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("series.csv");
    let truth = dir.path().join("truth.json");
    assert!(crops_bin(&["simulate", "-n", "300", "--seed", "2", "-o", path(&series), "--truth", path(&truth)]).status.success());
    let sim = crops_core::simulate::generate(&crops_core::simulate::SimulationSpec::new(
        300,
        crops_core::simulate::Regime::Fixed,
        crops_core::simulate::ModelKind::TrueGaussian,
        2,
    ))
    .unwrap();
    assert_eq!(read_values(&series), sim.series.values());
}

#[test]
fn segment_with_named_penalty_and_header() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("two.csv");
    let mut text = String::from("value\n");
    for t in 0..60 {
        text.push_str(&format!("{}\n", if t < 30 { 0.0 } else { 8.0 } + 0.1 * ((t * 7 % 11) as f64 - 5.0)));
    }
    std::fs::write(&input, text).unwrap();
    let out = dir.path().join("seg.json");
    let res = crops_bin(&["segment", "-i", path(&input), "--cost", "mean", "--penalty", "sic", "-o", path(&out)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let report = read_json(&out);
    assert_eq!(report["changepoints"], serde_json::json!([30]));
    assert!((report["beta"].as_f64().unwrap() - 60f64.ln()).abs() < 1e-12);
}

#[test]
fn sn_reports_every_count() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("s.csv");
    std::fs::write(&input, "1\n2\n3\n10\n11\n12\n").unwrap();
    let out = dir.path().join("sn.json");
    assert!(crops_bin(&["sn", "-i", path(&input), "--cost", "mean", "-M", "2", "-o", path(&out)]).status.success());
    let segs = read_json(&out)["segmentations"].as_array().unwrap().clone();
    assert_eq!(segs.len(), 3);
    assert_eq!(segs[1]["changepoints"], serde_json::json!([3]));
}

#[test]
fn bench_writes_three_rows_per_instance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.csv");
    let res = crops_bin(&["bench", "-n", "300,400", "--regime", "linear", "--instances", "2", "-o", path(&out)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2 * 2 * 3);
    for chunk in rows.chunks(3) {
        let methods: Vec<&str> = chunk.iter().map(|r| r.split(',').nth(3).unwrap()).collect();
        assert_eq!(methods, ["crops", "crops_recycle", "sn"]);
    }
}

#[test]
fn exit_codes_distinguish_usage_and_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    // unknown flag
    assert_eq!(crops_bin(&["crops", "--bogus"]).status.code(), Some(1));
    // reversed range
    let input = dir.path().join("ok.csv");
    std::fs::write(&input, "1\n2\n3\n4\n").unwrap();
    let res = crops_bin(&["crops", "-i", path(&input), "--beta-min", "5", "--beta-max", "1", "-o", path(&out)]);
    assert_eq!(res.status.code(), Some(1));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "1\n2\n3\n4\nabc\n6\n").unwrap();
    let res = crops_bin(&["segment", "-i", path(&bad), "--beta", "3", "-o", path(&out)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 5"));
    assert!(!out.exists());

    let missing = dir.path().join("missing.csv");
    let res = crops_bin(&["segment", "-i", path(&missing), "--beta", "3", "-o", path(&out)]);
    assert_eq!(res.status.code(), Some(2));
}
