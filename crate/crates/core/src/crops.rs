// SPDX-License-Identifier: MIT OR Apache-2.0

//! Changepoints for a range of penalties.
//!
//! Given optimal segmentations at two penalties `beta_0 < beta_1` with
//! changepoint counts `m_0 > m_1 + 1`, the only penalty worth solving next is
//! where the lines `P_{m_0}` and `P_{m_1}` cross. If the solve there returns
//! `m_1` the interval is settled; otherwise it splits in two. Each split
//! discovers a new count, which bounds the total number of solves by
//! `m(beta_min) - m(beta_max) + 2`.

use serde::Serialize;

use crate::costs::{CostModel, TimeSeries};
use crate::solvers::{solve_pelt_with, PeltOptions, Segmentation, SolverState, WarmStart};
use crate::{Error, TOLERANCE};

/// The affine function `P_m(beta) = Q_m + (m + 1) * beta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PmLine {
    pub m: usize,
    pub cost: f64,
}

impl PmLine {
    pub fn new(m: usize, cost: f64) -> Self {
        Self { m, cost }
    }

    pub fn of(seg: &Segmentation) -> Self {
        Self::new(seg.num_changepoints(), seg.cost())
    }

    pub fn eval(&self, beta: f64) -> f64 {
        self.cost + (self.m as f64 + 1.0) * beta
    }
}

/// Penalty at which the lines of a larger and a smaller changepoint count cross.
pub fn beta_intersection(more: PmLine, fewer: PmLine) -> Result<f64, Error> {
    if more.m <= fewer.m {
        return Err(Error::invalid(format!(
            "intersection needs a strictly larger changepoint count first, got {} and {}",
            more.m, fewer.m
        )));
    }
    if !(more.cost.is_finite() && fewer.cost.is_finite()) {
        return Err(Error::NonFinite("line cost is not finite".into()));
    }
    let beta = (fewer.cost - more.cost) / (more.m - fewer.m) as f64;
    if beta < -TOLERANCE {
        return Err(Error::invalid(format!(
            "lines for m = {} (cost {}) and m = {} (cost {}) cross at negative penalty {beta}",
            more.m, more.cost, fewer.m, fewer.cost
        )));
    }
    Ok(beta)
}

/// One run of a penalised solver.
#[derive(Clone, Debug)]
pub struct Solution {
    pub beta: f64,
    pub segmentation: Segmentation,
    /// Per-time records, when the solver exposes them.
    pub state: Option<SolverState>,
}

/// Anything that solves the penalised problem at a single penalty.
pub trait PenalisedSolver {
    fn solve(&mut self, beta: f64, warm_start: Option<&WarmStart>) -> Result<Solution, Error>;
}

/// PELT over a fixed series and cost model.
#[derive(Clone, Copy, Debug)]
pub struct PeltSolver<'a> {
    ts: &'a TimeSeries,
    model: &'a CostModel,
    options: PeltOptions,
}

impl<'a> PeltSolver<'a> {
    pub fn new(ts: &'a TimeSeries, model: &'a CostModel) -> Self {
        Self {
            ts,
            model,
            options: PeltOptions::default(),
        }
    }

    pub fn with_options(mut self, options: PeltOptions) -> Self {
        self.options = options;
        self
    }
}

impl PenalisedSolver for PeltSolver<'_> {
    fn solve(&mut self, beta: f64, warm_start: Option<&WarmStart>) -> Result<Solution, Error> {
        let (state, segmentation) = solve_pelt_with(self.ts, self.model, beta, warm_start, self.options)?;
        Ok(Solution {
            beta,
            segmentation,
            state: Some(state),
        })
    }
}

/// Builds a warm start at `beta_int` from solves at the bracketing penalties.
///
/// For each time `t`, if both runs agree on the changepoint count of the
/// optimal prefix segmentation, that segmentation is optimal at `beta_int`
/// too and its cost shifts by `m * (beta_int - beta_0)`. If the counts differ
/// by one, the cheaper of the two shifted costs wins, the smaller count on a
/// tie. Other times are left for the solver.
pub fn recycle_precompute(
    lo: &SolverState,
    hi: &SolverState,
    beta_int: f64,
) -> Result<WarmStart, Error> {
    if lo.len() != hi.len() {
        return Err(Error::invalid(format!(
            "states cover {} and {} observations",
            lo.len(),
            hi.len()
        )));
    }
    if !(lo.beta <= beta_int && beta_int <= hi.beta) {
        return Err(Error::invalid(format!(
            "penalty {beta_int} is not within [{}, {}]",
            lo.beta, hi.beta
        )));
    }
    let n = lo.len();
    let mut warm = WarmStart {
        beta: beta_int,
        resolved: vec![false; n + 1],
        f: vec![f64::INFINITY; n + 1],
        cp: vec![0; n + 1],
        m: vec![0; n + 1],
    };
    warm.resolved[0] = true;
    warm.f[0] = -beta_int;

    for t in 1..=n {
        if !(lo.f[t].is_finite() && hi.f[t].is_finite()) {
            continue;
        }
        let (m0, m1) = (lo.m[t], hi.m[t]);
        if m0 == m1 {
            warm.resolved[t] = true;
            warm.m[t] = m0;
            warm.cp[t] = lo.cp[t];
            warm.f[t] = lo.f[t] + m0 as f64 * (beta_int - lo.beta);
        } else if m0 == m1 + 1 {
            let a = lo.f[t] + m0 as f64 * (beta_int - lo.beta);
            let b = hi.f[t] + m1 as f64 * (beta_int - hi.beta);
            warm.resolved[t] = true;
            if a < b - TOLERANCE {
                warm.m[t] = m0;
                warm.cp[t] = lo.cp[t];
                warm.f[t] = a;
            } else {
                warm.m[t] = m1;
                warm.cp[t] = hi.cp[t];
                warm.f[t] = b;
            }
        }
    }
    Ok(warm)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CropsOptions {
    /// Warm-start each new solve from the two runs bracketing it.
    pub recycle: bool,
    pub tolerance: f64,
}

impl Default for CropsOptions {
    fn default() -> Self {
        Self {
            recycle: false,
            tolerance: TOLERANCE,
        }
    }
}

/// Audit record of a single solver run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunRecord {
    pub beta: f64,
    pub m: usize,
    pub cost: f64,
    /// Candidate terms scanned in minimisation steps.
    pub evaluations: u64,
    /// Times resolved from a warm start.
    pub warm_resolved: usize,
    pub seconds: f64,
}

/// A penalty interval and the segmentation optimal throughout it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PenaltyInterval {
    pub beta_lo: f64,
    pub beta_hi: f64,
    pub closed_lo: bool,
    pub closed_hi: bool,
    pub segmentation: Segmentation,
}

impl PenaltyInterval {
    pub fn m(&self) -> usize {
        self.segmentation.num_changepoints()
    }

    pub fn contains(&self, beta: f64) -> bool {
        let above = if self.closed_lo { beta >= self.beta_lo } else { beta > self.beta_lo };
        let below = if self.closed_hi { beta <= self.beta_hi } else { beta < self.beta_hi };
        above && below
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CropsResult {
    pub beta_min: f64,
    pub beta_max: f64,
    /// Ordered by increasing penalty, hence strictly decreasing `m`.
    pub intervals: Vec<PenaltyInterval>,
    /// Solver runs in execution order.
    pub runs: Vec<RunRecord>,
    pub solver_run_count: usize,
    /// Numerical guard events raised while driving the search.
    pub warnings: Vec<String>,
}

impl CropsResult {
    pub fn segmentations(&self) -> impl Iterator<Item = &Segmentation> {
        self.intervals.iter().map(|i| &i.segmentation)
    }

    pub fn lines(&self) -> Vec<PmLine> {
        self.segmentations().map(PmLine::of).collect()
    }

    /// Interval whose segmentation is optimal at `beta`.
    pub fn interval_at(&self, beta: f64) -> Option<&PenaltyInterval> {
        self.intervals.iter().find(|i| i.contains(beta))
    }

    pub fn m_range(&self) -> (usize, usize) {
        let last = self.intervals.last().map_or(0, |i| i.m());
        let first = self.intervals.first().map_or(0, |i| i.m());
        (last, first)
    }

    /// Candidate terms scanned in minimisation over all runs.
    pub fn total_evaluations(&self) -> u64 {
        self.runs.iter().map(|r| r.evaluations).sum()
    }
}

/// CROPS with PELT as the inner solver.
pub fn crops(
    ts: &TimeSeries,
    model: &CostModel,
    beta_min: f64,
    beta_max: f64,
    recycle: bool,
) -> Result<CropsResult, Error> {
    let mut solver = PeltSolver::new(ts, model);
    crops_with(
        &mut solver,
        beta_min,
        beta_max,
        CropsOptions {
            recycle,
            ..CropsOptions::default()
        },
    )
}

struct Run {
    beta: f64,
    segmentation: Segmentation,
    state: Option<SolverState>,
}

impl Run {
    fn m(&self) -> usize {
        self.segmentation.num_changepoints()
    }

    fn line(&self) -> PmLine {
        PmLine::of(&self.segmentation)
    }
}

fn timed_solve<S: PenalisedSolver>(
    solver: &mut S,
    beta: f64,
    warm: Option<&WarmStart>,
) -> Result<(Solution, f64), Error> {
    #[cfg(not(target_arch = "wasm32"))]
    let start = std::time::Instant::now();
    let solution = solver.solve(beta, warm).map_err(|e| Error::Solver {
        beta,
        source: Box::new(e),
    })?;
    #[cfg(not(target_arch = "wasm32"))]
    let seconds = start.elapsed().as_secs_f64();
    #[cfg(target_arch = "wasm32")]
    let seconds = 0.0;
    Ok((solution, seconds))
}

/// CROPS over any penalised solver.
///
/// The worklist is last-in-first-out with the left sub-interval processed
/// first, so the order of solver runs is deterministic.
pub fn crops_with<S: PenalisedSolver>(
    solver: &mut S,
    beta_min: f64,
    beta_max: f64,
    options: CropsOptions,
) -> Result<CropsResult, Error> {
    if !(beta_min.is_finite() && beta_max.is_finite()) || beta_min < 0.0 || beta_min >= beta_max {
        return Err(Error::invalid(format!(
            "penalty range must satisfy 0 <= beta_min < beta_max, got [{beta_min}, {beta_max}]"
        )));
    }
    let tol = options.tolerance;
    let mut runs: Vec<Run> = Vec::new();
    let mut records: Vec<RunRecord> = Vec::new();
    let mut warnings: Vec<String> = Vec::new();

    let mut execute = |beta: f64,
                       warm: Option<&WarmStart>,
                       runs: &mut Vec<Run>,
                       records: &mut Vec<RunRecord>|
     -> Result<usize, Error> {
        let (solution, seconds) = timed_solve(solver, beta, warm)?;
        let (evaluations, warm_resolved) = solution
            .state
            .as_ref()
            .map_or((0, 0), |s| (s.evaluations(), s.warm_resolved()));
        records.push(RunRecord {
            beta,
            m: solution.segmentation.num_changepoints(),
            cost: solution.segmentation.cost(),
            evaluations,
            warm_resolved,
            seconds,
        });
        runs.push(Run {
            beta,
            segmentation: solution.segmentation,
            state: if options.recycle { solution.state } else { None },
        });
        Ok(runs.len() - 1)
    };

    let lo = execute(beta_min, None, &mut runs, &mut records)?;
    let hi = execute(beta_max, None, &mut runs, &mut records)?;
    let mut worklist = vec![(lo, hi)];

    while let Some((i0, i1)) = worklist.pop() {
        let (m0, m1) = (runs[i0].m(), runs[i1].m());
        if m0 < m1 {
            let msg = format!(
                "m({}) = {m0} < m({}) = {m1}; changepoint count increased with the penalty",
                runs[i0].beta, runs[i1].beta
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
        if m0 <= m1 + 1 {
            release_states(&mut runs, &worklist, &[i0, i1]);
            continue;
        }
        let (b0, b1) = (runs[i0].beta, runs[i1].beta);
        let raw = (runs[i1].line().cost - runs[i0].line().cost) / (m0 - m1) as f64;
        if !(raw > b0 + tol && raw < b1 - tol) {
            let clamped = raw.clamp(b0, b1);
            let msg = format!(
                "intersection {raw} of m = {m0} and m = {m1} lies outside ({b0}, {b1}); settled at {clamped}"
            );
            log::warn!("{msg}");
            warnings.push(msg);
            release_states(&mut runs, &worklist, &[i0, i1]);
            continue;
        }
        let beta_int = raw;

        let warm = match (&runs[i0].state, &runs[i1].state) {
            (Some(a), Some(b)) if options.recycle => Some(recycle_precompute(a, b, beta_int)?),
            _ => None,
        };
        let mid = execute(beta_int, warm.as_ref(), &mut runs, &mut records)?;
        let mm = runs[mid].m();

        if mm == m1 {
            // settled: m0 on [b0, beta_int), m1 on [beta_int, b1]
        } else if mm >= m0 || mm < m1 {
            let msg = format!(
                "solve at {beta_int} returned m = {mm}, outside ({m1}, {m0}); interval treated as settled"
            );
            log::warn!("{msg}");
            warnings.push(msg);
        } else {
            worklist.push((mid, i1));
            worklist.push((i0, mid));
        }
        release_states(&mut runs, &worklist, &[i0, i1, mid]);
    }

    let intervals = build_intervals(&runs, beta_min, beta_max, &mut warnings)?;
    Ok(CropsResult {
        beta_min,
        beta_max,
        intervals,
        solver_run_count: records.len(),
        runs: records,
        warnings,
    })
}

fn release_states(runs: &mut [Run], worklist: &[(usize, usize)], touched: &[usize]) {
    for &i in touched {
        if !worklist.iter().any(|&(a, b)| a == i || b == i) {
            runs[i].state = None;
        }
    }
}

/// Turns the distinct segmentations found into contiguous penalty intervals.
/// Adjacent intervals meet where their lines cross; each boundary belongs to
/// the interval with fewer changepoints.
fn build_intervals(
    runs: &[Run],
    beta_min: f64,
    beta_max: f64,
    warnings: &mut Vec<String>,
) -> Result<Vec<PenaltyInterval>, Error> {
    let mut found: Vec<&Run> = Vec::new();
    for run in runs {
        if !found.iter().any(|r| r.m() == run.m()) {
            found.push(run);
        }
    }
    found.sort_by_key(|r| std::cmp::Reverse(r.m()));

    // Keep only points whose interval has positive width; with exact
    // arithmetic every found segmentation qualifies.
    let mut kept: Vec<&Run> = Vec::with_capacity(found.len());
    for run in found {
        kept.push(run);
        while kept.len() >= 2 {
            let k = kept.len();
            let right = beta_intersection(kept[k - 2].line(), kept[k - 1].line())?;
            let left = if k >= 3 {
                beta_intersection(kept[k - 3].line(), kept[k - 2].line())?
            } else {
                beta_min
            };
            if right > left {
                break;
            }
            let dropped = kept.remove(k - 2);
            let msg = format!(
                "segmentation with m = {} has an empty penalty interval and was dropped",
                dropped.m()
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }

    let mut intervals = Vec::with_capacity(kept.len());
    let mut lo = beta_min;
    for (i, run) in kept.iter().enumerate() {
        let hi = match kept.get(i + 1) {
            Some(next) => beta_intersection(run.line(), next.line())?.clamp(lo, beta_max),
            None => beta_max,
        };
        let last = i + 1 == kept.len();
        intervals.push(PenaltyInterval {
            beta_lo: lo,
            beta_hi: hi,
            closed_lo: true,
            closed_hi: last,
            segmentation: run.segmentation.clone(),
        });
        lo = hi;
    }
    Ok(intervals)
}

/// Changepoint counts strictly between the smallest and largest recovered
/// counts whose constrained cost lies strictly above the piecewise-linear
/// curve through the recovered `(m, Q_m)` points.
pub fn unreachable_segmentations(
    sn_results: &[Segmentation],
    crops_result: &CropsResult,
) -> Result<Vec<usize>, Error> {
    let mut points: Vec<(usize, f64)> = crops_result
        .segmentations()
        .map(|s| (s.num_changepoints(), s.cost()))
        .collect();
    points.sort_by_key(|p| p.0);
    let (Some(&(m_lo, _)), Some(&(m_hi, _))) = (points.first(), points.last()) else {
        return Ok(Vec::new());
    };
    if sn_results.len() <= m_hi {
        return Err(Error::invalid(format!(
            "constrained results cover m <= {}, need m <= {m_hi}",
            sn_results.len().saturating_sub(1)
        )));
    }
    let mut out = Vec::new();
    for pair in points.windows(2) {
        let ((ma, qa), (mb, qb)) = (pair[0], pair[1]);
        for (m, seg) in sn_results.iter().enumerate().take(mb).skip(ma + 1) {
            let chord = qa + (qb - qa) * (m - ma) as f64 / (mb - ma) as f64;
            if seg.cost() > chord + TOLERANCE {
                out.push(m);
            }
        }
    }
    debug_assert!(out.iter().all(|&m| m > m_lo && m < m_hi));
    Ok(out)
}
