// SPDX-License-Identifier: MIT OR Apache-2.0

//! The `crops` command-line tool.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical or solver
//! error. Log verbosity is read from `CROPS_LOG` (`error`, `warn`, `info`, ...).

pub mod io;
pub mod report;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use crate::costs::{CostKind, CostModel, TimeSeries, DEFAULT_VARIANCE_FLOOR};
use crate::crops::crops;
use crate::penalties::{elbow_from_crops, PenaltyRule};
use crate::simulate::{generate, ModelKind, Regime, SimulationSpec};
use crate::solvers::{solve_pelt, solve_sn};
use crate::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Data(_) => 2,
            Self::Numerical(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_numerical() || matches!(e, Error::Solver { .. }) {
            Self::Numerical(e.to_string())
        } else {
            Self::Data(e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "crops", version, about = "Changepoint segmentations over a range of penalties")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal segmentation for a single penalty (PELT).
    Segment(SegmentArgs),
    /// Every optimal segmentation for penalties in a range (CROPS).
    Crops(CropsArgs),
    /// Best segmentation for each number of changepoints up to a maximum.
    Sn(SnArgs),
    /// Generate a piecewise Gaussian series with known changepoints.
    Simulate(SimulateArgs),
    /// Time CROPS with and without recycling against SN on simulated data.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CostArg {
    Mean,
    Meanvar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "meanvar")]
    pub cost: CostArg,
    /// Known standard deviation for the change-in-mean cost.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Variance floor for the mean-and-variance cost.
    #[arg(long, default_value_t = DEFAULT_VARIANCE_FLOOR)]
    pub variance_floor: f64,
    #[arg(long)]
    pub min_seg_len: Option<usize>,
}

impl ModelArgs {
    fn model(&self) -> Result<CostModel, CliError> {
        let kind = match self.cost {
            CostArg::Mean => CostKind::MeanSquareError { sigma: self.sigma },
            CostArg::Meanvar => CostKind::MeanVariance {
                variance_floor: self.variance_floor,
            },
        };
        let model = CostModel::new(kind).map_err(usage)?;
        match self.min_seg_len {
            Some(l) => model.with_min_segment_length(l).map_err(usage),
            None => Ok(model),
        }
    }
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("penalty_mode").required(true).args(["beta", "penalty"]))]
pub struct SegmentArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Penalty value.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Penalty rule: aic, sic (bic), hq, or a number.
    #[arg(long)]
    pub penalty: Option<String>,
    #[arg(long, short)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CropsArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Lower end of the penalty range [default: ln n].
    #[arg(long, requires = "beta_max")]
    pub beta_min: Option<f64>,
    /// Upper end of the penalty range [default: 10 p ln n].
    #[arg(long, requires = "beta_min")]
    pub beta_max: Option<f64>,
    /// Disable warm starts between solver runs.
    #[arg(long)]
    pub no_recycle: bool,
    /// Directory receiving intervals.{json,csv}, elbow.csv, lines.csv and audit.csv.
    #[arg(long, short)]
    pub out_dir: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SnArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, short = 'M')]
    pub max_changepoints: usize,
    #[arg(long, short)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, short)]
    pub n: usize,
    /// fixed, sublinear or linear.
    #[arg(long, default_value = "fixed")]
    pub regime: Regime,
    /// true (i.i.d. within segments) or misspecified (drifting mean).
    #[arg(long, default_value = "true")]
    pub model: ModelKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Series CSV.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Optional JSON file with the true changepoints, means and sds.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Series lengths, comma separated.
    #[arg(long, short, value_delimiter = ',', default_value = "1000,2000,4000")]
    pub n: Vec<usize>,
    #[arg(long, default_value = "linear")]
    pub regime: Regime,
    #[arg(long, default_value = "true")]
    pub model: ModelKind,
    #[arg(long, default_value_t = 1)]
    pub instances: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub cost: ModelArgs,
    #[arg(long, short)]
    pub output: PathBuf,
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

/// Default penalty range `[ln n, 10 p ln n]`.
pub fn default_beta_range(n: usize, params_per_segment: usize) -> (f64, f64) {
    let ln = (n as f64).ln();
    (ln, 10.0 * params_per_segment as f64 * ln)
}

fn check_range(lo: f64, hi: f64) -> Result<(), CliError> {
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi) {
        return Err(CliError::Usage(format!(
            "penalty range must satisfy 0 <= beta_min < beta_max, got [{lo}, {hi}]"
        )));
    }
    Ok(())
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main() -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("CROPS_LOG", "warn"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Segment(a) => run_segment(&a),
        Command::Crops(a) => run_crops_command(&a),
        Command::Sn(a) => run_sn(&a),
        Command::Simulate(a) => run_simulate(&a),
        Command::Bench(a) => run_bench_command(&a),
    }
}

fn run_segment(a: &SegmentArgs) -> Result<(), CliError> {
    let model = a.model.model()?;
    let ts = io::ingest(&a.input)?;
    let beta = match (a.beta, &a.penalty) {
        (Some(b), None) => b,
        (None, Some(rule)) => {
            let rule: PenaltyRule = rule.parse().map_err(usage)?;
            rule.value(model.params_per_segment(), ts.len())?
        }
        _ => return Err(CliError::Usage("give exactly one of --beta and --penalty".into())),
    };
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(CliError::Usage(format!("penalty must be non-negative, got {beta}")));
    }
    let (_, seg) = solve_pelt(&ts, &model, beta, None)?;
    info!("beta {beta}: {} changepoints, cost {}", seg.num_changepoints(), seg.cost());
    let text = match a.format {
        Format::Json => report::segment_json(&seg, &model, ts.len(), beta),
        Format::Csv => report::segment_csv(&seg),
    };
    io::write_all_atomic(&[(a.output.clone(), text)])
}

pub fn run_crops_command(a: &CropsArgs) -> Result<(), CliError> {
    let model = a.model.model()?;
    let ts = io::ingest(&a.input)?;
    let (lo, hi) = match (a.beta_min, a.beta_max) {
        (Some(lo), Some(hi)) => (lo, hi),
        _ => default_beta_range(ts.len(), model.params_per_segment()),
    };
    check_range(lo, hi)?;
    let result = crops(&ts, &model, lo, hi, !a.no_recycle)?;
    for w in &result.warnings {
        log::warn!("{w}");
    }
    info!(
        "{} segmentations from {} solver runs",
        result.intervals.len(),
        result.solver_run_count
    );
    let elbow = if result.intervals.len() >= 2 {
        elbow_from_crops(&result)?
    } else {
        // a single segmentation has no elbow; report the lone point
        result.segmentations().map(|s| (s.num_changepoints(), s.cost())).collect()
    };
    let dir = &a.out_dir;
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;
    let intervals = match a.format {
        Format::Json => (dir.join("intervals.json"), report::crops_json(&result, &model, ts.len())),
        Format::Csv => (dir.join("intervals.csv"), report::crops_csv(&result)),
    };
    io::write_all_atomic(&[
        intervals,
        (dir.join("elbow.csv"), report::elbow_csv(&elbow)),
        (dir.join("lines.csv"), report::lines_csv(&result)),
        (dir.join("audit.csv"), report::audit_csv(&result)),
    ])
}

fn run_sn(a: &SnArgs) -> Result<(), CliError> {
    let model = a.model.model()?;
    let ts = io::ingest(&a.input)?;
    let segs = solve_sn(&ts, &model, a.max_changepoints)?;
    let text = match a.format {
        Format::Json => report::sn_json(&segs, &model, ts.len()),
        Format::Csv => report::sn_csv(&segs),
    };
    io::write_all_atomic(&[(a.output.clone(), text)])
}

fn run_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let spec = SimulationSpec::new(a.n, a.regime, a.model, a.seed);
    let sim = generate(&spec).map_err(usage)?;
    let mut files = vec![(a.output.clone(), report::series_csv(sim.series.values()))];
    if let Some(path) = &a.truth {
        let truth = serde_json::json!({
            "schema_version": report::SCHEMA_VERSION,
            "spec": spec,
            "changepoints": sim.changepoints,
            "means": sim.means,
            "sds": sim.sds,
        });
        files.push((path.clone(), format!("{truth:#}\n")));
    }
    io::write_all_atomic(&files)
}

/// One row of the benchmark table.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub regime: Regime,
    pub instance: usize,
    pub method: &'static str,
    pub seconds: f64,
    pub solver_runs: usize,
    pub max_changepoints: usize,
}

/// Times CROPS (recycling off and on) and SN with `M = m(beta_min)` on one
/// simulated series.
pub fn bench_instance(
    ts: &TimeSeries,
    model: &CostModel,
    n: usize,
    regime: Regime,
    instance: usize,
) -> Result<Vec<BenchRow>, CliError> {
    let (lo, hi) = default_beta_range(ts.len(), model.params_per_segment());
    let row = |method, seconds, solver_runs, max_changepoints| BenchRow {
        n,
        regime,
        instance,
        method,
        seconds,
        solver_runs,
        max_changepoints,
    };
    let mut rows = Vec::with_capacity(3);
    let mut max_m = 0;
    for (method, recycle) in [("crops", false), ("crops_recycle", true)] {
        let start = Instant::now();
        let result = crops(ts, model, lo, hi, recycle)?;
        let seconds = start.elapsed().as_secs_f64();
        max_m = result.m_range().1;
        rows.push(row(method, seconds, result.solver_run_count, max_m));
    }
    let start = Instant::now();
    solve_sn(ts, model, max_m)?;
    rows.push(row("sn", start.elapsed().as_secs_f64(), 1, max_m));
    Ok(rows)
}

pub fn run_bench_command(a: &BenchArgs) -> Result<(), CliError> {
    let model = a.cost.model()?;
    let mut out = String::from("n,regime,instance,method,seconds,solver_runs,max_changepoints\n");
    for &n in &a.n {
        for instance in 0..a.instances {
            let seed = a.seed.wrapping_add(instance as u64);
            let sim = generate(&SimulationSpec::new(n, a.regime, a.model, seed)).map_err(usage)?;
            for r in bench_instance(&sim.series, &model, n, a.regime, instance)? {
                info!("n={} {} {:.3}s", r.n, r.method, r.seconds);
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    r.n, r.regime, r.instance, r.method, r.seconds, r.solver_runs, r.max_changepoints
                ));
            }
        }
    }
    io::write_all_atomic(&[(a.output.clone(), out)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_crops_invocation() {
        let cli = Cli::try_parse_from([
            "crops", "crops", "-i", "x.csv", "--beta-min", "1", "--beta-max", "10", "-o", "out",
        ])
        .unwrap();
        let Command::Crops(a) = cli.command else { panic!() };
        assert_eq!((a.beta_min, a.beta_max), (Some(1.0), Some(10.0)));
        assert!(!a.no_recycle);
        assert_eq!(a.model.cost, CostArg::Meanvar);
    }

    #[test]
    fn penalty_modes_are_exclusive() {
        assert!(Cli::try_parse_from([
            "crops", "segment", "-i", "x", "-o", "y", "--beta", "3", "--penalty", "sic"
        ])
        .is_err());
        assert!(Cli::try_parse_from(["crops", "segment", "-i", "x", "-o", "y"]).is_err());
        assert!(Cli::try_parse_from([
            "crops", "crops", "-i", "x", "-o", "y", "--beta-min", "3"
        ])
        .is_err());
    }

    #[test]
    fn default_range_brackets_sic() {
        for n in [3usize, 10, 100, 10_000, 1_000_000] {
            for p in [1usize, 2] {
                let (lo, hi) = default_beta_range(n, p);
                let b = PenaltyRule::Sic.value(p, n).unwrap();
                assert!(lo <= b && b <= hi, "n={n} p={p}");
            }
        }
        // AIC and Hannan-Quinn fall below ln n once n is large enough
        assert!(PenaltyRule::Aic.value(2, 100).unwrap() < default_beta_range(100, 2).0);
        assert!(PenaltyRule::HannanQuinn.value(1, 10).unwrap() < default_beta_range(10, 1).0);
    }

    #[test]
    fn error_kinds_map_to_exit_codes() {
        assert_eq!(CliError::from(Error::NonFinite("x".into())).exit_code(), 3);
        assert_eq!(CliError::from(Error::InvalidInput("x".into())).exit_code(), 2);
        assert_eq!(usage("x").exit_code(), 1);
    }
}
