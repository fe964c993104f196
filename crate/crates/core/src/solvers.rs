// SPDX-License-Identifier: MIT OR Apache-2.0

//! Exact dynamic-programming solvers.
//!
//! Penalised solvers ([`solve_op`], [`solve_pelt`]) minimise
//! `sum_i [C(segment_i) + beta]` over all segmentations whose segments respect
//! the model's minimum length. The constrained solver ([`solve_sn`]) returns
//! the best segmentation for every changepoint count `0..=M`.
//!
//! The penalised recursion starts from `F(0) = -beta`, so that
//! `F(t) = Q_m(y_{1:t}) + m * beta` where `m` is the number of changepoints in
//! the optimal segmentation of the prefix. The penalised cost of the full
//! segmentation is then `F(n) + beta`.

use serde::Serialize;

use crate::costs::{CostModel, TimeSeries};
use crate::{Error, TOLERANCE};

/// Ordered changepoints with the unpenalised cost of the segmentation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Segmentation {
    changepoints: Vec<usize>,
    cost: f64,
}

impl Segmentation {
    /// Builds a segmentation, validating the changepoints and computing its
    /// cost from scratch.
    pub fn from_changepoints(
        ts: &TimeSeries,
        model: &CostModel,
        changepoints: Vec<usize>,
    ) -> Result<Self, Error> {
        if changepoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("changepoints must be strictly increasing"));
        }
        if let (Some(&first), Some(&last)) = (changepoints.first(), changepoints.last()) {
            if first == 0 || last >= ts.len() {
                return Err(Error::invalid(format!(
                    "changepoints must lie in 1..{}",
                    ts.len()
                )));
            }
        }
        let cost = model.segmentation_cost(ts, &changepoints)?;
        Ok(Self { changepoints, cost })
    }

    /// Assembles a segmentation without validation or cost recomputation.
    /// Intended for test doubles of penalised solvers.
    #[doc(hidden)]
    pub fn from_raw_parts(changepoints: Vec<usize>, cost: f64) -> Self {
        Self { changepoints, cost }
    }

    pub fn changepoints(&self) -> &[usize] {
        &self.changepoints
    }

    pub fn num_changepoints(&self) -> usize {
        self.changepoints.len()
    }

    /// Unpenalised cost `Q_m`.
    pub fn cost(&self) -> f64 {
        self.cost
    }

    /// `P_m(beta) = Q_m + (m + 1) * beta`.
    pub fn penalised_cost(&self, beta: f64) -> f64 {
        self.cost + (self.num_changepoints() as f64 + 1.0) * beta
    }

    /// `(start, end]` bounds of each segment.
    pub fn segments(&self, n: usize) -> Vec<(usize, usize)> {
        let mut bounds = Vec::with_capacity(self.changepoints.len() + 1);
        let mut prev = 0;
        for &cp in self.changepoints.iter().chain(std::iter::once(&n)) {
            bounds.push((prev, cp));
            prev = cp;
        }
        bounds
    }
}

/// Per-time records of one penalised solve.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    pub(crate) beta: f64,
    pub(crate) f: Vec<f64>,
    pub(crate) cp: Vec<usize>,
    pub(crate) m: Vec<usize>,
    pub(crate) candidate_counts: Vec<usize>,
    pub(crate) evaluations: u64,
    pub(crate) prune_evaluations: u64,
    pub(crate) warm_resolved: usize,
}

impl SolverState {
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Length of the underlying series.
    pub fn len(&self) -> usize {
        self.f.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Optimal penalised cost of each prefix; `+inf` where no admissible
    /// segmentation exists.
    pub fn costs(&self) -> &[f64] {
        &self.f
    }

    /// Most recent changepoint in the optimal segmentation of each prefix.
    pub fn last_changepoints(&self) -> &[usize] {
        &self.cp
    }

    /// Changepoint count of the optimal segmentation of each prefix.
    pub fn changepoint_counts(&self) -> &[usize] {
        &self.m
    }

    /// Size of the candidate set searched at each time.
    pub fn candidate_counts(&self) -> &[usize] {
        &self.candidate_counts
    }

    pub fn mean_candidate_count(&self) -> f64 {
        let n = self.len().max(1);
        self.candidate_counts.iter().sum::<usize>() as f64 / n as f64
    }

    /// Candidate terms evaluated inside the minimisation step.
    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    /// Cost evaluations spent on pruning tests at warm-started times.
    pub fn prune_evaluations(&self) -> u64 {
        self.prune_evaluations
    }

    /// Number of times whose records were taken from a warm start.
    pub fn warm_resolved(&self) -> usize {
        self.warm_resolved
    }
}

/// Precomputed records for a subset of times, used to skip minimisation.
#[derive(Clone, Debug, PartialEq)]
pub struct WarmStart {
    pub(crate) beta: f64,
    pub(crate) resolved: Vec<bool>,
    pub(crate) f: Vec<f64>,
    pub(crate) cp: Vec<usize>,
    pub(crate) m: Vec<usize>,
}

impl WarmStart {
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn len(&self) -> usize {
        self.resolved.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_resolved(&self, t: usize) -> bool {
        self.resolved[t]
    }

    pub fn resolved_count(&self) -> usize {
        self.resolved.iter().skip(1).filter(|&&r| r).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeltOptions {
    /// Disable to search every admissible candidate (Optimal Partitioning
    /// with PELT's bookkeeping).
    pub pruning: bool,
    /// Absolute tolerance for tie and pruning comparisons.
    pub tolerance: f64,
}

impl Default for PeltOptions {
    fn default() -> Self {
        Self {
            pruning: true,
            tolerance: TOLERANCE,
        }
    }
}

fn check_penalised_inputs(ts: &TimeSeries, model: &CostModel, beta: f64) -> Result<(), Error> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::invalid(format!(
            "penalty must be a non-negative finite number, got {beta}"
        )));
    }
    let min = model.min_segment_length();
    if ts.len() < min {
        return Err(Error::invalid(format!(
            "series of length {} is shorter than the minimum segment length {min}",
            ts.len()
        )));
    }
    Ok(())
}

/// Changepoints in a segmentation whose last changepoint is `s`.
#[inline]
fn count_through(m: &[usize], s: usize) -> usize {
    if s == 0 {
        0
    } else {
        m[s] + 1
    }
}

/// Picks the last changepoint among scored candidates: the lowest value up to
/// `tol`, then the fewest changepoints, then the lowest value, then the
/// earliest position. Returns the index into the candidate slices.
#[inline]
fn select(candidates: &[usize], values: &[f64], m: &[usize], tol: f64) -> usize {
    let best = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut chosen = usize::MAX;
    for (i, (&s, &v)) in candidates.iter().zip(values).enumerate() {
        if v > best + tol {
            continue;
        }
        if chosen == usize::MAX {
            chosen = i;
            continue;
        }
        let c = candidates[chosen];
        let better = (count_through(m, s), v, s) < (count_through(m, c), values[chosen], c);
        if better {
            chosen = i;
        }
    }
    chosen
}

/// Optimal Partitioning: exhaustive O(n^2) penalised recursion.
pub fn solve_op(
    ts: &TimeSeries,
    model: &CostModel,
    beta: f64,
) -> Result<(SolverState, Segmentation), Error> {
    check_penalised_inputs(ts, model, beta)?;
    let n = ts.len();
    let min = model.min_segment_length();

    let mut f = vec![f64::INFINITY; n + 1];
    let mut cp = vec![0usize; n + 1];
    let mut m = vec![0usize; n + 1];
    let mut candidate_counts = vec![0usize; n + 1];
    f[0] = -beta;

    let mut candidates = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    let mut evaluations = 0u64;

    for t in min..=n {
        candidates.clear();
        values.clear();
        for s in (0..=t - min).filter(|&s| s == 0 || s >= min) {
            candidates.push(s);
            values.push(f[s] + model.cost(ts, s, t));
        }
        evaluations += candidates.len() as u64;
        candidate_counts[t] = candidates.len();

        let i = select(&candidates, &values, &m, TOLERANCE);
        let s = candidates[i];
        f[t] = values[i] + beta;
        cp[t] = s;
        m[t] = count_through(&m, s);
    }

    let state = SolverState {
        beta,
        f,
        cp,
        m,
        candidate_counts,
        evaluations,
        prune_evaluations: 0,
        warm_resolved: 0,
    };
    let seg = backtrack(&state, ts, model)?;
    Ok((state, seg))
}

/// PELT with default options.
pub fn solve_pelt(
    ts: &TimeSeries,
    model: &CostModel,
    beta: f64,
    warm_start: Option<&WarmStart>,
) -> Result<(SolverState, Segmentation), Error> {
    solve_pelt_with(ts, model, beta, warm_start, PeltOptions::default())
}

/// Pruned Exact Linear Time search.
///
/// A time `s` becomes a candidate last changepoint once `min_segment_length`
/// observations follow it. After `F(t)` is known, every candidate with
/// `F(s) + C(y_{(s+1):t}) + K > F(t) + tol` can never again be optimal for an
/// end time `T` with `T - t >= min_segment_length`; it is kept until then and
/// removed afterwards.
///
/// With a warm start, times it resolves take their records directly and skip
/// the minimisation; pruning is still applied there so the candidate sets
/// match a cold solve.
pub fn solve_pelt_with(
    ts: &TimeSeries,
    model: &CostModel,
    beta: f64,
    warm_start: Option<&WarmStart>,
    options: PeltOptions,
) -> Result<(SolverState, Segmentation), Error> {
    check_penalised_inputs(ts, model, beta)?;
    let n = ts.len();
    let min = model.min_segment_length();
    let k = model.pruning_constant();
    let tol = options.tolerance;

    if let Some(warm) = warm_start {
        if warm.len() != n {
            return Err(Error::invalid(format!(
                "warm start covers {} observations, series has {n}",
                warm.len()
            )));
        }
        if warm.beta != beta {
            return Err(Error::invalid(format!(
                "warm start was prepared for penalty {}, solving at {beta}",
                warm.beta
            )));
        }
    }

    let mut f = vec![f64::INFINITY; n + 1];
    let mut cp = vec![0usize; n + 1];
    let mut m = vec![0usize; n + 1];
    let mut candidate_counts = vec![0usize; n + 1];
    f[0] = -beta;

    const NEVER: usize = usize::MAX;
    // (candidate, time from which it is no longer searched)
    let mut candidates: Vec<usize> = Vec::new();
    let mut expiry: Vec<usize> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut evaluations = 0u64;
    let mut prune_evaluations = 0u64;
    let mut warm_resolved = 0usize;

    for t in 1..=n {
        if t >= min {
            let s = t - min;
            if s == 0 || s >= min {
                candidates.push(s);
                expiry.push(NEVER);
            }
        }
        if expiry.iter().any(|&e| e <= t) {
            let mut keep = 0;
            for i in 0..candidates.len() {
                if expiry[i] > t {
                    candidates[keep] = candidates[i];
                    expiry[keep] = expiry[i];
                    keep += 1;
                }
            }
            candidates.truncate(keep);
            expiry.truncate(keep);
        }
        candidate_counts[t] = candidates.len();
        if candidates.is_empty() {
            continue;
        }

        values.clear();
        values.extend(candidates.iter().map(|&s| f[s] + model.cost(ts, s, t)));

        match warm_start.filter(|w| w.resolved[t]) {
            Some(warm) => {
                f[t] = warm.f[t];
                cp[t] = warm.cp[t];
                m[t] = warm.m[t];
                prune_evaluations += candidates.len() as u64;
                warm_resolved += 1;
            }
            None => {
                evaluations += candidates.len() as u64;
                let i = select(&candidates, &values, &m, tol);
                let s = candidates[i];
                f[t] = values[i] + beta;
                cp[t] = s;
                m[t] = count_through(&m, s);
            }
        }

        if options.pruning {
            let threshold = f[t] + tol;
            for (e, &v) in expiry.iter_mut().zip(&values) {
                if *e == NEVER && v + k > threshold {
                    *e = t + min;
                }
            }
        }
    }

    if !f[n].is_finite() {
        return Err(Error::NonFinite(format!(
            "optimal cost of the full series is {}",
            f[n]
        )));
    }

    let state = SolverState {
        beta,
        f,
        cp,
        m,
        candidate_counts,
        evaluations,
        prune_evaluations,
        warm_resolved,
    };
    let seg = backtrack(&state, ts, model)?;
    Ok((state, seg))
}

/// Follows the last-changepoint chain from `n` back to `0`.
pub fn backtrack_changepoints(state: &SolverState) -> Result<Vec<usize>, Error> {
    let n = state.len();
    let expected = state.m[n];
    let mut out = Vec::with_capacity(expected);
    let mut t = n;
    while t > 0 {
        let s = state.cp[t];
        if s >= t {
            return Err(Error::Integrity(format!(
                "last changepoint {s} at time {t} does not precede it"
            )));
        }
        if s == 0 {
            break;
        }
        if out.len() == expected {
            return Err(Error::Integrity(format!(
                "changepoint chain from {n} is longer than the recorded count {expected}"
            )));
        }
        out.push(s);
        t = s;
    }
    if out.len() != expected {
        return Err(Error::Integrity(format!(
            "recovered {} changepoints, state records {expected}",
            out.len()
        )));
    }
    out.reverse();
    Ok(out)
}

/// Recovers the optimal segmentation of the full series from a solved state.
pub fn backtrack(
    state: &SolverState,
    ts: &TimeSeries,
    model: &CostModel,
) -> Result<Segmentation, Error> {
    if state.len() != ts.len() {
        return Err(Error::invalid(format!(
            "state covers {} observations, series has {}",
            state.len(),
            ts.len()
        )));
    }
    let changepoints = backtrack_changepoints(state)?;
    Segmentation::from_changepoints(ts, model, changepoints)
}

/// Segment Neighbourhood search: the best segmentation with exactly `m`
/// changepoints for each `m` in `0..=max_changepoints`, in O(M n^2).
pub fn solve_sn(
    ts: &TimeSeries,
    model: &CostModel,
    max_changepoints: usize,
) -> Result<Vec<Segmentation>, Error> {
    let n = ts.len();
    let min = model.min_segment_length();
    if n < min {
        return Err(Error::invalid(format!(
            "series of length {n} is shorter than the minimum segment length {min}"
        )));
    }
    let feasible = n / min - 1;
    if max_changepoints > feasible {
        return Err(Error::invalid(format!(
            "{max_changepoints} changepoints cannot fit in {n} observations with minimum segment length {min} (at most {feasible})"
        )));
    }

    // best[t]: optimal cost of y_{1:t} with the current number of segments
    let mut prev = vec![f64::INFINITY; n + 1];
    for (t, slot) in prev.iter_mut().enumerate().skip(min) {
        *slot = model.cost(ts, 0, t);
    }
    // back[k][t]: last changepoint of the best (k+1)-segment split of y_{1:t}
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(max_changepoints);
    let mut finals = vec![prev[n]];

    for k in 1..=max_changepoints {
        let mut cur = vec![f64::INFINITY; n + 1];
        let mut arg = vec![0usize; n + 1];
        for t in ((k + 1) * min)..=n {
            let mut best = f64::INFINITY;
            let mut best_s = 0;
            for (s, &f) in prev[..=t - min].iter().enumerate().skip(k * min) {
                let v = f + model.cost(ts, s, t);
                if v < best {
                    best = v;
                    best_s = s;
                }
            }
            cur[t] = best;
            arg[t] = best_s;
        }
        finals.push(cur[n]);
        back.push(arg);
        prev = cur;
    }

    let mut out = Vec::with_capacity(max_changepoints + 1);
    for (m, total) in finals.iter().enumerate() {
        if !total.is_finite() {
            return Err(Error::NonFinite(format!(
                "constrained cost with {m} changepoints is {total}"
            )));
        }
        let mut cps = Vec::with_capacity(m);
        let mut t = n;
        for k in (1..=m).rev() {
            t = back[k - 1][t];
            cps.push(t);
        }
        cps.reverse();
        out.push(Segmentation::from_changepoints(ts, model, cps)?);
    }
    Ok(out)
}
