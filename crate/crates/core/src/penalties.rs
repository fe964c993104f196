// SPDX-License-Identifier: MIT OR Apache-2.0

//! Standard penalty constants and the elbow diagnostic.

use serde::{Deserialize, Serialize};

use crate::crops::CropsResult;
use crate::solvers::Segmentation;
use crate::{Error, TOLERANCE};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PenaltyRule {
    /// `2p`
    Aic,
    /// `p log n`
    Sic,
    /// `2p log log n`
    HannanQuinn,
    Manual(f64),
}

impl PenaltyRule {
    /// Penalty value for `p` parameters per segment and `n` observations.
    /// Logarithms are natural.
    pub fn value(&self, params_per_segment: usize, n: usize) -> Result<f64, Error> {
        let p = params_per_segment as f64;
        let needs = |min: usize| {
            if n < min {
                Err(Error::invalid(format!(
                    "{self:?} needs at least {min} observations, got {n}"
                )))
            } else {
                Ok(())
            }
        };
        match *self {
            Self::Aic => {
                needs(1)?;
                Ok(2.0 * p)
            }
            Self::Sic => {
                needs(3)?;
                Ok(p * (n as f64).ln())
            }
            Self::HannanQuinn => {
                needs(3)?;
                Ok(2.0 * p * (n as f64).ln().ln())
            }
            Self::Manual(v) => {
                if v.is_finite() && v >= 0.0 {
                    Ok(v)
                } else {
                    Err(Error::invalid(format!("manual penalty must be non-negative, got {v}")))
                }
            }
        }
    }
}

impl std::str::FromStr for PenaltyRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "aic" => Ok(Self::Aic),
            "sic" | "bic" | "schwarz" => Ok(Self::Sic),
            "hq" | "hannan-quinn" | "hannanquinn" => Ok(Self::HannanQuinn),
            other => other
                .parse::<f64>()
                .map(Self::Manual)
                .map_err(|_| Error::invalid(format!("unknown penalty rule {s:?}"))),
        }
    }
}

/// Penalty value for `rule` (shorthand for [`PenaltyRule::value`]).
pub fn penalty_value(rule: PenaltyRule, params_per_segment: usize, n: usize) -> Result<f64, Error> {
    rule.value(params_per_segment, n)
}

/// Unpenalised cost against changepoint count, ordered by increasing `m`.
///
/// Errors if the cost rises with `m`. That cannot happen for CROPS output, but
/// can for constrained optima when a minimum segment length above one forces
/// short segments near the largest feasible `m`.
pub fn elbow_curve<I>(points: I) -> Result<Vec<(usize, f64)>, Error>
where
    I: IntoIterator<Item = (usize, f64)>,
{
    let mut curve: Vec<(usize, f64)> = points.into_iter().collect();
    curve.sort_by_key(|p| p.0);
    curve.dedup_by_key(|p| p.0);
    if curve.len() < 2 {
        return Err(Error::invalid(format!(
            "elbow curve needs at least two changepoint counts, got {}",
            curve.len()
        )));
    }
    for w in curve.windows(2) {
        if w[1].1 > w[0].1 + TOLERANCE * w[0].1.abs().max(1.0) {
            return Err(Error::invalid(format!(
                "cost increases from {} at m = {} to {} at m = {}",
                w[0].1, w[0].0, w[1].1, w[1].0
            )));
        }
    }
    Ok(curve)
}

pub fn elbow_from_crops(result: &CropsResult) -> Result<Vec<(usize, f64)>, Error> {
    elbow_curve(result.segmentations().map(|s| (s.num_changepoints(), s.cost())))
}

pub fn elbow_from_segmentations(segs: &[Segmentation]) -> Result<Vec<(usize, f64)>, Error> {
    elbow_curve(segs.iter().map(|s| (s.num_changepoints(), s.cost())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_values() {
        assert_eq!(PenaltyRule::Aic.value(2, 100).unwrap(), 4.0);
        assert!((PenaltyRule::Sic.value(2, 100).unwrap() - 9.2103).abs() < 1e-4);
        assert!((PenaltyRule::HannanQuinn.value(2, 100).unwrap() - 6.10872).abs() < 1e-4);
        assert_eq!(PenaltyRule::Manual(3.5).value(2, 1).unwrap(), 3.5);
    }

    #[test]
    fn small_n_rejected() {
        assert!(PenaltyRule::Sic.value(2, 2).is_err());
        assert!(PenaltyRule::HannanQuinn.value(1, 1).is_err());
        assert!(PenaltyRule::Aic.value(1, 0).is_err());
        assert!(PenaltyRule::Manual(-1.0).value(1, 10).is_err());
    }

    #[test]
    fn ordering_at_large_n() {
        for n in [100, 1000, 10_000] {
            let aic = PenaltyRule::Aic.value(2, n).unwrap();
            let hq = PenaltyRule::HannanQuinn.value(2, n).unwrap();
            let sic = PenaltyRule::Sic.value(2, n).unwrap();
            assert!(aic < hq && hq < sic, "n = {n}");
        }
    }

    #[test]
    fn parses_rule_names() {
        assert_eq!("SIC".parse::<PenaltyRule>().unwrap(), PenaltyRule::Sic);
        assert_eq!("hq".parse::<PenaltyRule>().unwrap(), PenaltyRule::HannanQuinn);
        assert_eq!("2.5".parse::<PenaltyRule>().unwrap(), PenaltyRule::Manual(2.5));
        assert!("mdl".parse::<PenaltyRule>().is_err());
    }

    #[test]
    fn elbow_orders_by_m() {
        let pts = vec![(13, 20.0), (7, 61.8), (16, 0.0), (8, 52.6), (10, 37.2)];
        let curve = elbow_curve(pts).unwrap();
        let ms: Vec<usize> = curve.iter().map(|p| p.0).collect();
        assert_eq!(ms, vec![7, 8, 10, 13, 16]);
        assert_eq!(elbow_curve(vec![(0, 5.0), (1, 2.0)]).unwrap(), vec![(0, 5.0), (1, 2.0)]);
        assert!(elbow_curve(vec![(1, 2.0)]).is_err());
        assert!(elbow_curve(vec![(0, 1.0), (1, 2.0)]).is_err());
    }
}
