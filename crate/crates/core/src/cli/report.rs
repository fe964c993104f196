// SPDX-License-Identifier: MIT OR Apache-2.0

//! Text renderings of results. Floats use the shortest decimal form that
//! parses back to the same value.

use std::fmt::Write;

use serde::Serialize;

use crate::costs::CostModel;
use crate::crops::CropsResult;
use crate::solvers::Segmentation;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct IntervalRecord<'a> {
    beta_lo: f64,
    beta_hi: f64,
    m: usize,
    cost: f64,
    changepoints: &'a [usize],
}

#[derive(Serialize)]
struct CropsReport<'a> {
    schema_version: u32,
    n: usize,
    model: &'a CostModel,
    beta_min: f64,
    beta_max: f64,
    solver_runs: usize,
    intervals: Vec<IntervalRecord<'a>>,
    warnings: &'a [String],
}

#[derive(Serialize)]
struct SegmentReport<'a> {
    schema_version: u32,
    n: usize,
    model: &'a CostModel,
    beta: f64,
    m: usize,
    cost: f64,
    penalised_cost: f64,
    changepoints: &'a [usize],
}

#[derive(Serialize)]
struct SnRecord<'a> {
    m: usize,
    cost: f64,
    changepoints: &'a [usize],
}

#[derive(Serialize)]
struct SnReport<'a> {
    schema_version: u32,
    n: usize,
    model: &'a CostModel,
    max_changepoints: usize,
    segmentations: Vec<SnRecord<'a>>,
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialise");
    s.push('\n');
    s
}

fn join(cps: &[usize]) -> String {
    cps.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

pub fn crops_json(result: &CropsResult, model: &CostModel, n: usize) -> String {
    to_json(&CropsReport {
        schema_version: SCHEMA_VERSION,
        n,
        model,
        beta_min: result.beta_min,
        beta_max: result.beta_max,
        solver_runs: result.solver_run_count,
        intervals: result
            .intervals
            .iter()
            .map(|i| IntervalRecord {
                beta_lo: i.beta_lo,
                beta_hi: i.beta_hi,
                m: i.m(),
                cost: i.segmentation.cost(),
                changepoints: i.segmentation.changepoints(),
            })
            .collect(),
        warnings: &result.warnings,
    })
}

pub fn crops_csv(result: &CropsResult) -> String {
    let mut out = String::from("beta_lo,beta_hi,m,cost,changepoints\n");
    for i in &result.intervals {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            i.beta_lo,
            i.beta_hi,
            i.m(),
            i.segmentation.cost(),
            join(i.segmentation.changepoints())
        );
    }
    out
}

pub fn elbow_csv(curve: &[(usize, f64)]) -> String {
    let mut out = String::from("m,cost\n");
    for (m, q) in curve {
        let _ = writeln!(out, "{m},{q}");
    }
    out
}

/// The `P_m(beta) = Q_m + (m + 1) beta` lines, one per recovered segmentation.
pub fn lines_csv(result: &CropsResult) -> String {
    let mut out = String::from("m,intercept,slope\n");
    for line in result.lines() {
        let _ = writeln!(out, "{},{},{}", line.m, line.cost, line.m + 1);
    }
    out
}

pub fn audit_csv(result: &CropsResult) -> String {
    let mut out = String::from("run,beta,m,cost,seconds,evaluations,warm_resolved\n");
    for (k, r) in result.runs.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            k + 1,
            r.beta,
            r.m,
            r.cost,
            r.seconds,
            r.evaluations,
            r.warm_resolved
        );
    }
    out
}

pub fn segment_json(seg: &Segmentation, model: &CostModel, n: usize, beta: f64) -> String {
    to_json(&SegmentReport {
        schema_version: SCHEMA_VERSION,
        n,
        model,
        beta,
        m: seg.num_changepoints(),
        cost: seg.cost(),
        penalised_cost: seg.penalised_cost(beta),
        changepoints: seg.changepoints(),
    })
}

pub fn segment_csv(seg: &Segmentation) -> String {
    let mut out = String::from("changepoint\n");
    for c in seg.changepoints() {
        let _ = writeln!(out, "{c}");
    }
    out
}

pub fn sn_json(segs: &[Segmentation], model: &CostModel, n: usize) -> String {
    to_json(&SnReport {
        schema_version: SCHEMA_VERSION,
        n,
        model,
        max_changepoints: segs.len().saturating_sub(1),
        segmentations: segs
            .iter()
            .map(|s| SnRecord {
                m: s.num_changepoints(),
                cost: s.cost(),
                changepoints: s.changepoints(),
            })
            .collect(),
    })
}

pub fn sn_csv(segs: &[Segmentation]) -> String {
    let mut out = String::from("m,cost,changepoints\n");
    for s in segs {
        let _ = writeln!(out, "{},{},{}", s.num_changepoints(), s.cost(), join(s.changepoints()));
    }
    out
}

pub fn series_csv(values: &[f64]) -> String {
    let mut out = String::from("value\n");
    for v in values {
        let _ = writeln!(out, "{v}");
    }
    out
}
