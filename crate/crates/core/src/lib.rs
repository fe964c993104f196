// SPDX-License-Identifier: MIT OR Apache-2.0

//! Exact changepoint search for piecewise Gaussian data.
//!
//! The crate solves the penalised segmentation problem with Optimal
//! Partitioning and PELT, the constrained problem with Segment Neighbourhood
//! search, and recovers every segmentation that is optimal for some penalty in
//! a range `[beta_min, beta_max]` with [`crops::crops`].
//!
//! ```
//! use crops_core::{costs::{CostModel, TimeSeries}, solvers::solve_pelt};
//!
//! let mut values = vec![0.0; 30];
//! values.extend(std::iter::repeat(5.0).take(30));
//! values.iter_mut().enumerate().for_each(|(i, v)| *v += ((i * 7 % 5) as f64 - 2.0) * 0.1);
//! let ts = TimeSeries::new(values).unwrap();
//! let model = CostModel::mean(1.0);
//! let (_, seg) = solve_pelt(&ts, &model, 10.0, None).unwrap();
//! assert_eq!(seg.changepoints(), &[30]);
//! ```

#![forbid(unsafe_code)]

pub mod costs;
pub mod crops;
mod error;
pub mod metrics;
pub mod penalties;
pub mod simulate;
pub mod solvers;

#[cfg(feature = "cli")]
pub mod cli;

pub use costs::{CostKind, CostModel, TimeSeries};
pub use crops::{crops, CropsOptions, CropsResult, PenaltyInterval, PmLine};
pub use error::Error;
pub use penalties::PenaltyRule;
pub use solvers::{solve_op, solve_pelt, solve_sn, Segmentation, SolverState};

/// Absolute tolerance used for tie-breaking and pruning comparisons.
pub const TOLERANCE: f64 = 1e-9;
