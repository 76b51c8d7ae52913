//! Command-line front end: scoring, sweeps, comparisons, estimators and the
//! synthetic experiments, over CSV datasets and JSON service configs.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Result;
use crate::output::Format;

#[derive(Debug, Parser)]
#[command(name = "firm", version, about = "Score ordered categorical forecasts")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Also write the result to this file (format from --format, else the extension)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Machine-readable format; without --out it replaces the text report on stdout
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,

    /// Seed for every random draw
    #[arg(long, default_value_t = 1, global = true)]
    pub seed: u64,

    /// Confidence level for intervals and one-sided tests
    #[arg(long, default_value_t = 0.95, global = true)]
    pub level: f64,
}

/// Service config and dataset.
#[derive(Debug, Clone, Args)]
pub struct Inputs {
    /// Service config (JSON)
    #[arg(long)]
    pub config: PathBuf,

    /// Forecast/observation dataset (CSV)
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mean score, miss/false-alarm split and contingency table of one dataset
    Score {
        #[command(flatten)]
        inputs: Inputs,

        /// Write the contingency table here (a = 0 only)
        #[arg(long)]
        table_out: Option<PathBuf>,
    },

    /// Mean score when categories are chosen at level beta instead of alpha
    SweepBeta {
        #[command(flatten)]
        inputs: Inputs,

        /// Grid as a comma list or start:stop:step
        #[arg(long, value_parser = parse_grid, default_value = "0.05:0.95:0.05")]
        betas: Grid,
    },

    /// Mean score with both the scoring rule and the directive at each alpha
    SweepAlpha {
        #[command(flatten)]
        inputs: Inputs,

        /// Grid as a comma list or start:stop:step
        #[arg(long, value_parser = parse_grid, default_value = "0.05:0.95:0.05")]
        alphas: Grid,
    },

    /// Intervals for the mean daily score difference A - B
    Compare {
        #[command(flatten)]
        inputs: Inputs,

        /// Dataset of system B (--data is system A)
        #[arg(long)]
        data_b: PathBuf,

        #[arg(long, value_enum, default_value_t = MethodChoice::All)]
        method: MethodChoice,

        /// Forecast horizon for the Diebold-Mariano interval
        #[arg(long, default_value_t = 1)]
        horizon: usize,

        /// Bootstrap block length [default: round(sqrt(days))]
        #[arg(long)]
        block_length: Option<usize>,

        #[arg(long, default_value_t = firm_core::inference::DEFAULT_REPLICATES)]
        replicates: usize,

        /// Also test one-sidedly at --level
        #[arg(long, value_enum)]
        one_sided: Option<Side>,
    },

    /// Implicit alpha from a contingency table or a dataset
    EstimateAlpha {
        /// Contingency table (CSV)
        #[arg(long, conflicts_with_all = ["config", "data"])]
        table: Option<PathBuf>,

        #[arg(long, requires = "data")]
        config: Option<PathBuf>,

        #[arg(long, requires = "config")]
        data: Option<PathBuf>,

        /// The event is an observation above this category
        #[arg(long, default_value_t = 0)]
        split_after: usize,
    },

    /// Experiments on perfectly calibrated synthetic systems
    #[command(subcommand)]
    Synthetic(Synthetic),
}

#[derive(Debug, Subcommand)]
pub enum Synthetic {
    /// Chance that a trial meets POD >= 0.7 and FAR <= 0.4
    PodFar {
        #[arg(long, value_parser = parse_grid, default_value = "0.1:0.9:0.1")]
        alphas: Grid,

        #[arg(long, value_parser = parse_grid, default_value = "0.01,0.05,0.1,0.25")]
        base_rates: Grid,

        #[arg(long, value_parser = parse_grid, default_value = "0.01,0.1,0.25,0.5")]
        rel_uncertainties: Grid,

        #[arg(long, default_value_t = 1000)]
        cases_per_trial: usize,

        /// Add trials until the standard error is below this
        #[arg(long, default_value_t = 0.008)]
        target_se: f64,

        #[arg(long, default_value_t = 200_000)]
        max_trials: usize,
    },

    /// Estimated against true alpha
    AlphaBias {
        #[arg(long, value_parser = parse_grid, default_value = "0.05:0.95:0.05")]
        alphas: Grid,

        #[arg(long, value_parser = parse_grid, default_value = "0.01,0.05,0.1,0.25")]
        base_rates: Grid,

        #[arg(long, value_parser = parse_grid, default_value = "0.01,0.1,0.25,0.5")]
        rel_uncertainties: Grid,

        #[arg(long, default_value_t = 1_000_000)]
        cases: usize,

        /// Use 2e7 cases per grid point
        #[arg(long, conflicts_with = "cases")]
        full: bool,
    },

    /// Best early-warning level beta against decisions at alpha
    Leadtime {
        #[arg(long, default_value_t = 0.75)]
        alpha: f64,

        #[arg(long, default_value_t = 0.05)]
        base_rate: f64,

        /// Predictive spread at the standard lead time, relative to climate
        #[arg(long, default_value_t = 0.5)]
        rel_standard: f64,

        /// Predictive spread at the early lead time, relative to climate
        #[arg(long, default_value_t = 0.7)]
        rel_early: f64,

        /// Cost of retracting an early warning (a late warning costs 1)
        #[arg(long, default_value_t = 15.0)]
        retraction: f64,

        #[arg(long, default_value_t = 200_000)]
        cases: usize,

        #[arg(long, value_parser = parse_grid, default_value = "0.05:0.95:0.05")]
        betas: Grid,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodChoice {
    T,
    Dm,
    Bootstrap,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Side {
    /// A's mean score exceeds B's
    Greater,
    /// A's mean score is below B's (A is better)
    Less,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

/// `0.1,0.2,0.5` or `start:stop:step` (inclusive, values rounded to 12 decimals).
pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let num = |t: &str| -> Result<f64, String> {
        let v: f64 = t.trim().parse().map_err(|_| format!("not a number: {t:?}"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("not finite: {t:?}"))
        }
    };
    let parts: Vec<&str> = s.split(':').collect();
    let values = match parts.as_slice() {
        [list] => list.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if !(step > 0.0) || stop < start {
                return Err("range needs start <= stop and a positive step".into());
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            (0..=n)
                .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
                .collect()
        }
        _ => return Err(format!("expected a comma list or start:stop:step, got {s:?}")),
    };
    if values.is_empty() {
        return Err("empty grid".into());
    }
    Ok(Grid(values))
}

pub fn run(cli: Cli) -> Result<()> {
    let report = match cli.command {
        Command::Score { inputs, table_out } => commands::score(&inputs, table_out.as_deref())?,
        Command::SweepBeta { inputs, betas } => commands::sweep_beta(&inputs, &betas.0)?,
        Command::SweepAlpha { inputs, alphas } => commands::sweep_alpha(&inputs, &alphas.0)?,
        Command::Compare {
            inputs,
            data_b,
            method,
            horizon,
            block_length,
            replicates,
            one_sided,
        } => commands::compare(
            &inputs,
            &data_b,
            &commands::CompareOptions {
                method,
                horizon,
                block_length,
                replicates,
                one_sided,
                level: cli.common.level,
                seed: cli.common.seed,
            },
        )?,
        Command::EstimateAlpha {
            table,
            config,
            data,
            split_after,
        } => commands::estimate_alpha(table.as_deref(), config.as_deref(), data.as_deref(), split_after)?,
        Command::Synthetic(s) => commands::synthetic(s, cli.common.seed)?,
    };
    report.emit(cli.common.format, cli.common.out.as_deref())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0.1,0.5").unwrap().0, vec![0.1, 0.5]);
        let g = parse_grid("0.05:0.95:0.05").unwrap().0;
        assert_eq!(g.len(), 19);
        assert_eq!(g[2], 0.15);
        assert_eq!(g[18], 0.95);
        assert_eq!(parse_grid("1:1:1").unwrap().0, vec![1.0]);
        assert!(parse_grid("").is_err());
        assert!(parse_grid("1:0:1").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("a,b").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
