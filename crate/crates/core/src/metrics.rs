// SPDX-License-Identifier: MIT OR Apache-2.0

//! Accuracy of estimated segmentations against a known truth.

use serde::Serialize;

use crate::costs::TimeSeries;
use crate::crops::CropsResult;
use crate::solvers::Segmentation;
use crate::Error;

/// Default matching window, in time points.
pub const DEFAULT_MATCH_TOLERANCE: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AccuracyReport {
    pub true_positives: usize,
    pub false_positives: usize,
    /// True positives over the number of true changepoints.
    pub proportion_detected: f64,
    /// False positives over the number of detected changepoints.
    pub proportion_false: f64,
    pub mse_mean: f64,
    pub mse_sd: f64,
    pub correct_m_beta_range: Option<(f64, f64)>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Counts true changepoints with a detection within `tolerance` of them.
///
/// Each detection matches at most one true changepoint. Matching sweeps the
/// true changepoints in order and assigns each the earliest unused detection
/// inside its window, which yields a maximum matching since all windows have
/// the same width. Returns `(TP, FP)` with `FP = |detected| - TP`.
pub fn match_changepoints(truth: &[usize], detected: &[usize], tolerance: usize) -> (usize, usize) {
    let mut tp = 0;
    let mut next = 0;
    for &c in truth {
        while next < detected.len() && detected[next] + tolerance < c {
            next += 1;
        }
        if next < detected.len() && detected[next] <= c + tolerance {
            tp += 1;
            next += 1;
        }
    }
    (tp, detected.len() - tp)
}

/// Per-time maximum-likelihood `(mean, sd)` of the segment each time falls in.
pub fn per_time_estimates(ts: &TimeSeries, seg: &Segmentation) -> (Vec<f64>, Vec<f64>) {
    let n = ts.len();
    let mut means = Vec::with_capacity(n);
    let mut sds = Vec::with_capacity(n);
    for (s, t) in seg.segments(n) {
        let (mean, sd) = ts.segment_moments(s, t);
        means.extend(std::iter::repeat_n(mean, t - s));
        sds.extend(std::iter::repeat_n(sd, t - s));
    }
    (means, sds)
}

/// `sum_i (estimate_i - truth_i)^2 / n`.
pub fn parameter_mse(truth: &[f64], estimate: &[f64]) -> Result<f64, Error> {
    if truth.len() != estimate.len() {
        return Err(Error::invalid(format!(
            "truth has {} values, estimate has {}",
            truth.len(),
            estimate.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::invalid("cannot average over an empty series"));
    }
    let sse: f64 = truth.iter().zip(estimate).map(|(a, b)| (b - a) * (b - a)).sum();
    Ok(sse / truth.len() as f64)
}

/// Union of the penalty intervals whose segmentation has `true_m` changepoints.
pub fn correct_m_range(result: &CropsResult, true_m: usize) -> Option<(f64, f64)> {
    let mut matching = result.intervals.iter().filter(|i| i.m() == true_m);
    let first = matching.next()?;
    let last = matching.next_back().unwrap_or(first);
    Some((first.beta_lo, last.beta_hi))
}

/// Full accuracy summary of one estimated segmentation.
pub fn accuracy_report(
    ts: &TimeSeries,
    estimate: &Segmentation,
    true_changepoints: &[usize],
    true_means: &[f64],
    true_sds: &[f64],
    crops_result: Option<&CropsResult>,
) -> Result<AccuracyReport, Error> {
    let (tp, fp) = match_changepoints(
        true_changepoints,
        estimate.changepoints(),
        DEFAULT_MATCH_TOLERANCE,
    );
    let (means, sds) = per_time_estimates(ts, estimate);
    Ok(AccuracyReport {
        true_positives: tp,
        false_positives: fp,
        proportion_detected: ratio(tp, true_changepoints.len()),
        proportion_false: ratio(fp, estimate.num_changepoints()),
        mse_mean: parameter_mse(true_means, &means)?,
        mse_sd: parameter_mse(true_sds, &sds)?,
        correct_m_beta_range: crops_result
            .and_then(|r| correct_m_range(r, true_changepoints.len())),
    })
}
