// SPDX-License-Identifier: MIT OR Apache-2.0

//! Segment costs evaluated in O(1) from prefix sums.
//!
//! Both bundled costs are minus twice a maximised Gaussian log-likelihood (up
//! to additive constants that do not depend on the segmentation), so the
//! PELT pruning constant is zero for either of them.

use serde::{Deserialize, Serialize};

use crate::Error;

/// Default floor applied to the empirical variance of a segment.
pub const DEFAULT_VARIANCE_FLOOR: f64 = 1e-12;

/// An observed series together with prefix sums of values and squared values.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    cum_sum: Vec<f64>,
    cum_sum_sq: Vec<f64>,
    // [sum_hi, sum_lo, sq_hi, sq_lo] per prefix: each prefix sum kept as an
    // unevaluated double-double, packed for the cost hot path
    prefix: Vec<[f64; 4]>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self, Error> {
        if values.is_empty() {
            return Err(Error::invalid("time series must contain at least one value"));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "observation {} is {}",
                pos + 1,
                values[pos]
            )));
        }

        let n = values.len() + 1;
        let mut prefix = Vec::with_capacity(n);
        let (mut s, mut ss) = (dd::ZERO, dd::ZERO);
        for v in std::iter::once(None).chain(values.iter().map(Some)) {
            if let Some(&v) = v {
                s = dd::add(s, (v, 0.0));
                ss = dd::add(ss, dd::two_prod(v, v));
            }
            prefix.push([s.0, s.1, ss.0, ss.1]);
        }

        Ok(Self {
            cum_sum: prefix.iter().map(|p| p[0]).collect(),
            cum_sum_sq: prefix.iter().map(|p| p[2]).collect(),
            values,
            prefix,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cum_sum(&self) -> &[f64] {
        &self.cum_sum
    }

    pub fn cum_sum_sq(&self) -> &[f64] {
        &self.cum_sum_sq
    }

    /// Sum and sum of squares of the observations `s+1..=t` (1-indexed).
    pub fn segment_sums(&self, s: usize, t: usize) -> (f64, f64) {
        let (a, b) = (&self.prefix[s], &self.prefix[t]);
        ((b[0] - a[0]) + (b[1] - a[1]), (b[2] - a[2]) + (b[3] - a[3]))
    }

    /// Sum of squared deviations from the mean over the segment `(s, t]`,
    /// clamped at zero.
    #[inline]
    pub(crate) fn residual_sum_sq(&self, s: usize, t: usize) -> f64 {
        let (a, b) = (&self.prefix[s], &self.prefix[t]);
        let len = (t - s) as f64;
        let sum = (b[0] - a[0]) + (b[1] - a[1]);
        let sum_sq = (b[2] - a[2]) + (b[3] - a[3]);
        let rss = sum_sq - sum * sum / len;
        // sum and sum_sq carry relative errors of a few ulps, so the residual
        // is accurate to about 1e-12 whenever it is not tiny next to sum_sq
        if rss * 1024.0 >= sum_sq {
            return rss;
        }
        let sum = dd::sub((b[0], b[1]), (a[0], a[1]));
        let sum_sq = dd::sub((b[2], b[3]), (a[2], a[3]));
        let r = dd::sub(sum_sq, dd::div(dd::square(sum), len));
        (r.0 + r.1).max(0.0)
    }

    /// Maximum-likelihood mean and standard deviation of the segment `(s, t]`.
    pub fn segment_moments(&self, s: usize, t: usize) -> (f64, f64) {
        let len = (t - s) as f64;
        let (sum, _) = self.segment_sums(s, t);
        (sum / len, (self.residual_sum_sq(s, t) / len).sqrt())
    }
}

/// Double-double arithmetic, enough to evaluate `SS - S^2 / len` from prefix
/// sums without losing the residual to cancellation.
mod dd {
    pub type Dd = (f64, f64);

    pub const ZERO: Dd = (0.0, 0.0);

    #[inline]
    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }

    #[inline]
    fn quick_two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        (s, b - (s - a))
    }

    #[inline]
    fn split(a: f64) -> Dd {
        // Veltkamp splitting; fine for the magnitudes seen here (< 2^996)
        let c = 134_217_729.0 * a;
        let hi = c - (c - a);
        (hi, a - hi)
    }

    #[inline]
    pub fn two_prod(a: f64, b: f64) -> Dd {
        let p = a * b;
        let (ah, al) = split(a);
        let (bh, bl) = split(b);
        (p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)
    }

    #[inline]
    pub fn add(a: Dd, b: Dd) -> Dd {
        let (s, e) = two_sum(a.0, b.0);
        quick_two_sum(s, e + a.1 + b.1)
    }

    #[inline]
    pub fn sub(a: Dd, b: Dd) -> Dd {
        add(a, (-b.0, -b.1))
    }

    #[inline]
    pub fn square(a: Dd) -> Dd {
        let (p, e) = two_prod(a.0, a.0);
        quick_two_sum(p, e + 2.0 * a.0 * a.1)
    }

    #[inline]
    pub fn div(a: Dd, b: f64) -> Dd {
        let q1 = a.0 / b;
        let (p, e) = two_prod(q1, b);
        let (s, f) = two_sum(a.0, -p);
        let q2 = (s + (f - e + a.1)) / b;
        quick_two_sum(q1, q2)
    }
}

/// The parametric family whose maximised likelihood defines the segment cost.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostKind {
    /// Change in mean with a known common standard deviation.
    MeanSquareError { sigma: f64 },
    /// Change in mean and variance.
    MeanVariance { variance_floor: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    kind: CostKind,
    min_segment_length: usize,
    pruning_constant: f64,
}

impl CostModel {
    pub fn new(kind: CostKind) -> Result<Self, Error> {
        let min_segment_length = match kind {
            CostKind::MeanSquareError { sigma } => {
                if !(sigma.is_finite() && sigma > 0.0) {
                    return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
                }
                1
            }
            CostKind::MeanVariance { variance_floor } => {
                if !(variance_floor.is_finite() && variance_floor > 0.0) {
                    return Err(Error::invalid(format!(
                        "variance floor must be positive, got {variance_floor}"
                    )));
                }
                2
            }
        };
        Ok(Self {
            kind,
            min_segment_length,
            pruning_constant: 0.0,
        })
    }

    /// Change-in-mean cost with known standard deviation `sigma`.
    ///
    /// # Panics
    /// If `sigma` is not a positive finite number.
    pub fn mean(sigma: f64) -> Self {
        Self::new(CostKind::MeanSquareError { sigma }).expect("invalid sigma")
    }

    /// Change-in-mean-and-variance cost with the default variance floor.
    pub fn mean_variance() -> Self {
        Self::new(CostKind::MeanVariance {
            variance_floor: DEFAULT_VARIANCE_FLOOR,
        })
        .expect("default floor is valid")
    }

    pub fn with_min_segment_length(mut self, min_segment_length: usize) -> Result<Self, Error> {
        let floor = match self.kind {
            CostKind::MeanSquareError { .. } => 1,
            CostKind::MeanVariance { .. } => 2,
        };
        if min_segment_length < floor {
            return Err(Error::invalid(format!(
                "minimum segment length {min_segment_length} is below {floor} for this cost"
            )));
        }
        self.min_segment_length = min_segment_length;
        Ok(self)
    }

    pub fn kind(&self) -> CostKind {
        self.kind
    }

    pub fn min_segment_length(&self) -> usize {
        self.min_segment_length
    }

    /// Constant `K` in the PELT pruning inequality.
    pub fn pruning_constant(&self) -> f64 {
        self.pruning_constant
    }

    /// Number of parameters estimated per segment.
    pub fn params_per_segment(&self) -> usize {
        match self.kind {
            CostKind::MeanSquareError { .. } => 1,
            CostKind::MeanVariance { .. } => 2,
        }
    }

    /// Cost of the segment `y_{(s+1):t}`.
    pub fn segment_cost(&self, ts: &TimeSeries, s: usize, t: usize) -> Result<f64, Error> {
        if s >= t || t > ts.len() {
            return Err(Error::invalid(format!(
                "segment ({s}, {t}] is not within a series of length {}",
                ts.len()
            )));
        }
        if t - s < self.min_segment_length {
            return Err(Error::SegmentTooShort {
                start: s,
                end: t,
                len: t - s,
                min: self.min_segment_length,
            });
        }
        let cost = self.cost(ts, s, t);
        if !cost.is_finite() {
            return Err(Error::NonFinite(format!("cost of segment ({s}, {t}] is {cost}")));
        }
        Ok(cost)
    }

    /// Unchecked cost used on the solver hot paths.
    #[inline]
    pub(crate) fn cost(&self, ts: &TimeSeries, s: usize, t: usize) -> f64 {
        let rss = ts.residual_sum_sq(s, t);
        match self.kind {
            CostKind::MeanSquareError { sigma } => rss / (sigma * sigma),
            CostKind::MeanVariance { variance_floor } => {
                let len = (t - s) as f64;
                len * ((rss / len).max(variance_floor).ln() + 1.0)
            }
        }
    }

    /// Sum of segment costs for the segmentation given by `changepoints`.
    pub fn segmentation_cost(&self, ts: &TimeSeries, changepoints: &[usize]) -> Result<f64, Error> {
        let mut prev = 0;
        let mut total = 0.0;
        for &cp in changepoints.iter().chain(std::iter::once(&ts.len())) {
            total += self.segment_cost(ts, prev, cp)?;
            prev = cp;
        }
        Ok(total)
    }
}
