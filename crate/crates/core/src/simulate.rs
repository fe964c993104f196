// SPDX-License-Identifier: MIT OR Apache-2.0

//! Piecewise Gaussian data generators with known changepoints.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::costs::TimeSeries;
use crate::Error;

/// How the number of changepoints scales with the series length.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Always 10 changepoints.
    Fixed,
    /// `round(sqrt(n) / 4)` changepoints.
    Sublinear,
    /// `round(n / 100)` changepoints.
    Linear,
}

impl Regime {
    pub fn changepoint_count(&self, n: usize) -> usize {
        // f64::round rounds halves away from zero, i.e. up for positive values
        match self {
            Self::Fixed => 10,
            Self::Sublinear => ((n as f64).sqrt() / 4.0).round() as usize,
            Self::Linear => (n as f64 / 100.0).round() as usize,
        }
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fixed" => Ok(Self::Fixed),
            "sublinear" => Ok(Self::Sublinear),
            "linear" => Ok(Self::Linear),
            _ => Err(Error::invalid(format!("unknown regime {s:?}"))),
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Fixed => "fixed",
            Self::Sublinear => "sublinear",
            Self::Linear => "linear",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// i.i.d. Gaussian observations within each segment.
    TrueGaussian,
    /// Segment mean drifts as a Gaussian random walk.
    Misspecified,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "true" | "gaussian" | "true-gaussian" => Ok(Self::TrueGaussian),
            "misspecified" | "drift" => Ok(Self::Misspecified),
            _ => Err(Error::invalid(format!("unknown model {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub n: usize,
    pub regime: Regime,
    pub model_kind: ModelKind,
    /// Minimum number of observations in every segment.
    pub min_gap: usize,
    /// Standard deviation of the segment (initial) means.
    pub mean_sd: f64,
    /// Log-scale standard deviation of the segment standard deviations.
    pub lognormal_sigma: f64,
    /// Standard deviation of the per-step drift of the misspecified model.
    pub drift_sd: f64,
    pub seed: u64,
}

impl SimulationSpec {
    pub fn new(n: usize, regime: Regime, model_kind: ModelKind, seed: u64) -> Self {
        Self {
            n,
            regime,
            model_kind,
            min_gap: 20,
            mean_sd: 2.5,
            lognormal_sigma: 10f64.ln() / 2.0,
            drift_sd: 0.1f64.sqrt(),
            seed,
        }
    }

    pub fn changepoint_count(&self) -> usize {
        self.regime.changepoint_count(self.n)
    }

    fn validate(&self) -> Result<(), Error> {
        let m = self.changepoint_count();
        if self.min_gap == 0 || (m + 1) * self.min_gap > self.n {
            return Err(Error::invalid(format!(
                "{m} changepoints with minimum gap {} do not fit in {} observations",
                self.min_gap, self.n
            )));
        }
        for (name, v) in [
            ("mean_sd", self.mean_sd),
            ("lognormal_sigma", self.lognormal_sigma),
            ("drift_sd", self.drift_sd),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Simulated {
    pub series: TimeSeries,
    pub changepoints: Vec<usize>,
    /// True mean at each time.
    pub means: Vec<f64>,
    /// True standard deviation at each time.
    pub sds: Vec<f64>,
}

/// Draws changepoints uniformly among all placements whose segments all have
/// at least `min_gap` observations.
///
/// Segment lengths are `min_gap` plus a uniformly drawn weak composition of
/// the slack `n - (m + 1) * min_gap` into `m + 1` parts, which maps one to one
/// onto feasible placements.
pub fn sample_changepoints<R: rand::Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    m: usize,
    min_gap: usize,
) -> Result<Vec<usize>, Error> {
    if min_gap == 0 || (m + 1) * min_gap > n {
        return Err(Error::invalid(format!(
            "{m} changepoints with minimum gap {min_gap} do not fit in {n} observations"
        )));
    }
    let slack = n - (m + 1) * min_gap;
    let mut bars = sample(rng, slack + m, m).into_vec();
    bars.sort_unstable();
    // bar i at position b leaves b - i slack units before it
    Ok(bars
        .iter()
        .enumerate()
        .map(|(i, &b)| (i + 1) * min_gap + (b - i))
        .collect())
}

pub fn generate(spec: &SimulationSpec) -> Result<Simulated, Error> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let m = spec.changepoint_count();
    let changepoints = sample_changepoints(&mut rng, spec.n, m, spec.min_gap)?;

    let mean_dist = Normal::new(0.0, spec.mean_sd).map_err(|e| Error::invalid(e.to_string()))?;
    let sd_dist =
        LogNormal::new(0.0, spec.lognormal_sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let drift = Normal::new(0.0, spec.drift_sd).map_err(|e| Error::invalid(e.to_string()))?;
    let noise = Normal::new(0.0, 1.0).expect("standard normal");

    let mut values = Vec::with_capacity(spec.n);
    let mut means = Vec::with_capacity(spec.n);
    let mut sds = Vec::with_capacity(spec.n);
    let mut start = 0;
    for end in changepoints.iter().copied().chain(std::iter::once(spec.n)) {
        let mu = mean_dist.sample(&mut rng);
        let sd = sd_dist.sample(&mut rng);
        let mut nu = mu;
        for t in start..end {
            if t > start && spec.model_kind == ModelKind::Misspecified {
                nu += drift.sample(&mut rng);
            }
            means.push(nu);
            sds.push(sd);
            values.push(nu + sd * noise.sample(&mut rng));
        }
        start = end;
    }

    Ok(Simulated {
        series: TimeSeries::new(values)?,
        changepoints,
        means,
        sds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fixed_regime_has_ten_spaced_changepoints() {
        let sim = generate(&SimulationSpec::new(1000, Regime::Fixed, ModelKind::TrueGaussian, 7)).unwrap();
        assert_eq!(sim.changepoints.len(), 10);
        let mut prev = 0;
        for &c in sim.changepoints.iter().chain(std::iter::once(&1000)) {
            assert!(c - prev >= 20);
            prev = c;
        }
        assert_eq!(sim.series.len(), 1000);
        assert_eq!(sim.means.len(), 1000);
    }

    #[test]
    fn regime_counts() {
        assert_eq!(Regime::Sublinear.changepoint_count(400), 5);
        assert_eq!(Regime::Linear.changepoint_count(2000), 20);
        assert_eq!(Regime::Linear.changepoint_count(250), 3);
        assert_eq!(Regime::Fixed.changepoint_count(50_000), 10);
    }

    #[test]
    fn deterministic_given_seed() {
        let spec = SimulationSpec::new(500, Regime::Linear, ModelKind::Misspecified, 42);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = SimulationSpec { seed: 43, ..spec.clone() };
        assert_ne!(generate(&spec).unwrap().series, generate(&other).unwrap().series);
    }

    #[test]
    fn infeasible_spec_rejected() {
        assert!(generate(&SimulationSpec::new(200, Regime::Fixed, ModelKind::TrueGaussian, 1)).is_err());
        assert!(generate(&SimulationSpec::new(220, Regime::Fixed, ModelKind::TrueGaussian, 1)).is_ok());
    }

    #[test]
    fn true_model_is_constant_within_segments() {
        let sim = generate(&SimulationSpec::new(300, Regime::Sublinear, ModelKind::TrueGaussian, 3)).unwrap();
        let mut start = 0;
        for &end in sim.changepoints.iter().chain(std::iter::once(&300)) {
            assert!(sim.means[start..end].iter().all(|&v| v == sim.means[start]));
            assert!(sim.sds[start..end].iter().all(|&v| v == sim.sds[start]));
            start = end;
        }
    }

    #[test]
    fn misspecified_mean_drifts() {
        let sim = generate(&SimulationSpec::new(300, Regime::Sublinear, ModelKind::Misspecified, 3)).unwrap();
        let first = sim.changepoints[0];
        assert!(sim.means[..first].windows(2).any(|w| w[0] != w[1]));
    }

    #[test]
    fn initial_means_centred() {
        let mut firsts = Vec::new();
        for seed in 0..91 {
            let sim = generate(&SimulationSpec::new(1000, Regime::Fixed, ModelKind::TrueGaussian, seed)).unwrap();
            firsts.push(sim.means[0]);
            firsts.extend(sim.changepoints.iter().map(|&c| sim.means[c]));
        }
        assert_eq!(firsts.len(), 1001);
        let avg = firsts.iter().sum::<f64>() / firsts.len() as f64;
        assert!(avg.abs() < 3.0 * 2.5 / (firsts.len() as f64).sqrt(), "{avg}");
    }

    proptest! {
        #[test]
        fn gaps_respect_minimum(n in 60usize..2000, gap in 1usize..30, seed: u64) {
            let m = (n / gap).saturating_sub(1).min(25);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cps = sample_changepoints(&mut rng, n, m, gap).unwrap();
            prop_assert_eq!(cps.len(), m);
            let mut prev = 0;
            for &c in cps.iter().chain(std::iter::once(&n)) {
                prop_assert!(c >= prev + gap);
                prev = c;
            }
        }
    }

    #[test]
    fn placements_are_uniform() {
        // n = 7, m = 2, gap = 2: slack 1 spread over 3 segments, 3 placements
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut counts = std::collections::BTreeMap::new();
        for _ in 0..30_000 {
            *counts.entry(sample_changepoints(&mut rng, 7, 2, 2).unwrap()).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), 3);
        for (k, &c) in &counts {
            assert!((c as f64 - 10_000.0).abs() < 500.0, "{k:?}: {c}");
        }
    }
}
