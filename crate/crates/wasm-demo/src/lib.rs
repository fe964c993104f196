// SPDX-License-Identifier: MIT OR Apache-2.0

//! Browser bindings for the demo page. Every export takes plain numbers and
//! strings and returns a JSON string, so the page needs no glue beyond
//! `JSON.parse`.

use crops_core::simulate::{generate, SimulationSpec};
use crops_core::{crops, solve_pelt, CostModel, TimeSeries};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn model(cost: &str) -> Result<CostModel, String> {
    match cost {
        "mean" => Ok(CostModel::mean(1.0)),
        "meanvar" => Ok(CostModel::mean_variance()),
        other => Err(format!("unknown cost {other:?}")),
    }
}

fn series(values: &[f64]) -> Result<TimeSeries, String> {
    TimeSeries::new(values.to_vec()).map_err(|e| e.to_string())
}

fn segments_of(ts: &TimeSeries, changepoints: &[usize]) -> Vec<Value> {
    let mut bounds = vec![0];
    bounds.extend_from_slice(changepoints);
    bounds.push(ts.len());
    bounds
        .windows(2)
        .map(|w| {
            let (mean, sd) = ts.segment_moments(w[0], w[1]);
            json!({ "start": w[0], "end": w[1], "mean": mean, "sd": sd })
        })
        .collect()
}

pub fn simulate_value(n: usize, regime: &str, kind: &str, seed: u64) -> Result<Value, String> {
    let regime = regime.parse().map_err(|e: crops_core::Error| e.to_string())?;
    let kind = kind.parse().map_err(|e: crops_core::Error| e.to_string())?;
    let sim = generate(&SimulationSpec::new(n, regime, kind, seed)).map_err(|e| e.to_string())?;
    Ok(json!({
        "values": sim.series.values(),
        "changepoints": sim.changepoints,
        "means": sim.means,
    }))
}

pub fn crops_value(values: &[f64], cost: &str, beta_min: f64, beta_max: f64) -> Result<Value, String> {
    let ts = series(values)?;
    let model = model(cost)?;
    let result = crops(&ts, &model, beta_min, beta_max, true).map_err(|e| e.to_string())?;
    let intervals: Vec<Value> = result
        .intervals
        .iter()
        .map(|i| {
            json!({
                "beta_lo": i.beta_lo,
                "beta_hi": i.beta_hi,
                "m": i.m(),
                "cost": i.segmentation.cost(),
                "changepoints": i.segmentation.changepoints(),
                "segments": segments_of(&ts, i.segmentation.changepoints()),
            })
        })
        .collect();
    Ok(json!({
        "beta_min": result.beta_min,
        "beta_max": result.beta_max,
        "solver_runs": result.solver_run_count,
        "intervals": intervals,
    }))
}

pub fn segment_value(values: &[f64], cost: &str, beta: f64) -> Result<Value, String> {
    let ts = series(values)?;
    let model = model(cost)?;
    let (_, seg) = solve_pelt(&ts, &model, beta, None).map_err(|e| e.to_string())?;
    Ok(json!({
        "beta": beta,
        "m": seg.num_changepoints(),
        "cost": seg.cost(),
        "changepoints": seg.changepoints(),
        "segments": segments_of(&ts, seg.changepoints()),
    }))
}

fn to_js(v: Result<Value, String>) -> Result<String, JsError> {
    v.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

/// Simulated series with its true changepoints and per-time means.
#[wasm_bindgen]
pub fn simulate(n: usize, regime: &str, kind: &str, seed: u32) -> Result<String, JsError> {
    to_js(simulate_value(n, regime, kind, u64::from(seed)))
}

/// Every optimal segmentation for penalties in `[beta_min, beta_max]`.
#[wasm_bindgen]
pub fn run_crops(values: &[f64], cost: &str, beta_min: f64, beta_max: f64) -> Result<String, JsError> {
    to_js(crops_value(values, cost, beta_min, beta_max))
}

/// Optimal segmentation at a single penalty.
#[wasm_bindgen]
pub fn segment(values: &[f64], cost: &str, beta: f64) -> Result<String, JsError> {
    to_js(segment_value(values, cost, beta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crops_intervals_agree_with_single_solves() {
        let sim = simulate_value(400, "fixed", "true", 3).unwrap();
        let values: Vec<f64> = serde_json::from_value(sim["values"].clone()).unwrap();
        let out = crops_value(&values, "meanvar", 5.0, 40.0).unwrap();
        for iv in out["intervals"].as_array().unwrap() {
            let mid = (iv["beta_lo"].as_f64().unwrap() + iv["beta_hi"].as_f64().unwrap()) / 2.0;
            let seg = segment_value(&values, "meanvar", mid).unwrap();
            assert_eq!(seg["changepoints"], iv["changepoints"]);
        }
    }

    #[test]
    fn segments_cover_the_series() {
        let values = [0.0, 0.1, -0.1, 5.0, 5.2, 4.9];
        let out = segment_value(&values, "mean", 1.0).unwrap();
        let segs = out["segments"].as_array().unwrap();
        assert_eq!(segs.first().unwrap()["start"], 0);
        assert_eq!(segs.last().unwrap()["end"], 6);
        assert_eq!(out["changepoints"], json!([3]));
        assert!((segs[1]["mean"].as_f64().unwrap() - 5.033333333333333).abs() < 1e-12);
    }

    #[test]
    fn bad_input_is_an_error() {
        assert!(segment_value(&[], "mean", 1.0).is_err());
        assert!(segment_value(&[1.0, 2.0], "poisson", 1.0).is_err());
        assert!(crops_value(&[1.0, 2.0, 3.0], "mean", 5.0, 1.0).is_err());
        assert!(simulate_value(100, "weekly", "true", 0).is_err());
    }
}
