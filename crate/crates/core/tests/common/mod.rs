// SPDX-License-Identifier: MIT OR Apache-2.0

//! Independent oracles shared by the integration tests and the acceptance
//! runner. Nothing here calls the solvers under test.

#![allow(dead_code)]

use crops_core::costs::{CostModel, TimeSeries};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gaussian noise around a few random mean and scale levels.
pub fn random_series(rng: &mut ChaCha8Rng, n: usize) -> TimeSeries {
    let levels = rng.random_range(1..=3usize);
    let mut values = Vec::with_capacity(n);
    let mut mean = 0.0;
    let mut sd = 1.0;
    for t in 0..n {
        if t == 0 || rng.random_range(0..n) < levels {
            mean = Normal::new(0.0, 3.0).unwrap().sample(rng);
            sd = rng.random_range(0.3..2.0);
        }
        values.push(mean + sd * Normal::new(0.0, 1.0).unwrap().sample(rng));
    }
    TimeSeries::new(values).unwrap()
}

/// Direct two-pass segment cost, independent of the prefix sums.
pub fn direct_cost(model: &CostModel, values: &[f64]) -> f64 {
    use crops_core::costs::CostKind;
    let len = values.len() as f64;
    let mean = values.iter().sum::<f64>() / len;
    let rss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    match model.kind() {
        CostKind::MeanSquareError { sigma } => rss / (sigma * sigma),
        CostKind::MeanVariance { variance_floor } => {
            len * ((rss / len).max(variance_floor).ln() + 1.0)
        }
    }
}

/// Every admissible segmentation of `values` as `(changepoints, Q)`.
pub fn all_segmentations(model: &CostModel, values: &[f64]) -> Vec<(Vec<usize>, f64)> {
    let n = values.len();
    let min = model.min_segment_length();
    let mut out = Vec::new();
    for mask in 0u32..(1 << (n - 1)) {
        let cps: Vec<usize> = (1..n).filter(|&i| mask & (1 << (i - 1)) != 0).collect();
        let mut prev = 0;
        let mut ok = true;
        let mut q = 0.0;
        for &c in cps.iter().chain(std::iter::once(&n)) {
            if c - prev < min {
                ok = false;
                break;
            }
            q += direct_cost(model, &values[prev..c]);
            prev = c;
        }
        if ok {
            out.push((cps, q));
        }
    }
    out
}

/// Exhaustive penalised optimum: `(Q + (m + 1) beta, minimal m among the
/// optima within tol)`.
pub fn exhaustive_penalised(model: &CostModel, values: &[f64], beta: f64, tol: f64) -> (f64, usize) {
    let all = all_segmentations(model, values);
    let pen = |(cps, q): &(Vec<usize>, f64)| q + (cps.len() + 1) as f64 * beta;
    let best = all.iter().map(pen).fold(f64::INFINITY, f64::min);
    let m = all
        .iter()
        .filter(|s| pen(s) <= best + tol)
        .map(|s| s.0.len())
        .min()
        .unwrap();
    (best, m)
}

/// Exhaustive constrained optimum `Q_m` for each m (`None` if infeasible).
pub fn exhaustive_constrained(model: &CostModel, values: &[f64]) -> Vec<Option<f64>> {
    let mut best = vec![None; values.len()];
    for (cps, q) in all_segmentations(model, values) {
        let slot: &mut Option<f64> = &mut best[cps.len()];
        *slot = Some(slot.map_or(q, |b: f64| b.min(q)));
    }
    best
}

/// Vertices of the lower convex hull of `points` (sorted by m), keeping only
/// strict corners: a point within `tol` of a chord is not a vertex.
pub fn lower_hull(points: &[(usize, f64)], tol: f64) -> Vec<(usize, f64)> {
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for &p in points {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // b is kept only if it lies strictly below the chord from a to p
            let chord = a.1 + (p.1 - a.1) * (b.0 - a.0) as f64 / (p.0 - a.0) as f64;
            if b.1 < chord - tol {
                break;
            }
            hull.pop();
        }
        hull.push(p);
    }
    hull
}

/// Distinct changepoint vectors found by solving on `points` evenly spaced
/// penalties covering `[lo, hi]`.
pub fn grid_segmentations(
    ts: &TimeSeries,
    model: &CostModel,
    lo: f64,
    hi: f64,
    points: usize,
) -> std::collections::BTreeSet<Vec<usize>> {
    (0..points)
        .map(|k| {
            let beta = lo + (hi - lo) * k as f64 / (points - 1) as f64;
            crops_core::solve_pelt(ts, model, beta, None)
                .unwrap()
                .1
                .changepoints()
                .to_vec()
        })
        .collect()
}
