//! Argument definitions and top-level dispatch.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands;

#[derive(Parser)]
#[command(
    name = "trajcluster",
    version,
    about = "Cluster longitudinal trajectories from long-format CSV data",
    disable_help_subcommand = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Column-name options shared by data-facing commands.
#[derive(Args, Debug, Clone)]
pub struct ColumnOpts {
    /// Trajectory id column (env TRAJCLUSTER_ID)
    #[arg(long)]
    pub id: Option<String>,
    /// Time column (env TRAJCLUSTER_TIME)
    #[arg(long)]
    pub time: Option<String>,
    /// Response column
    #[arg(long)]
    pub response: Option<String>,
    /// Optional ground-truth group column
    #[arg(long)]
    pub group: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct CommonOpts {
    /// Flat key=value config file providing flag defaults
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Subcommand)]
pub enum Command {
    /// Generate a synthetic therapy-adherence dataset as long CSV
    Simulate {
        /// Number of trajectories
        #[arg(long, default_value_t = 301)]
        n: usize,
        /// Number of weekly observations per trajectory
        #[arg(long, default_value_t = 13)]
        weeks: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        columns: ColumnOpts,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Fit one method and write model.json plus a text summary
    Fit {
        /// Long-format CSV input
        #[arg(long)]
        data: PathBuf,
        /// Method name (kml, lmkm, gbtm, gmm, kmedoids, stratify, random, feature)
        #[arg(long)]
        method: String,
        /// Number of clusters
        #[arg(long, default_value_t = 2)]
        clusters: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Method argument overrides, name=value (repeatable)
        #[arg(long = "arg")]
        args: Vec<String>,
        /// Include measured estimation time in model.json
        #[arg(long, default_value_t = false)]
        timings: bool,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        columns: ColumnOpts,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Fit methods over a cluster range and emit a metric table and chart
    Sweep {
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated method names
        #[arg(long)]
        methods: String,
        /// Cluster counts: K, A..B, or a comma list
        #[arg(long)]
        clusters: String,
        /// Comma-separated internal metric names
        #[arg(long, default_value = "Dunn,WMAE,estimationTime")]
        metrics: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = false)]
        parallel: bool,
        #[arg(long = "arg")]
        args: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        columns: ColumnOpts,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Build a reference partition model from a ground-truth group column
    Truth {
        /// Long-format CSV input with a group column
        #[arg(long)]
        data: PathBuf,
        /// Pointwise center: mean | median
        #[arg(long, default_value = "mean")]
        center: String,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        columns: ColumnOpts,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Compare saved models with external metrics
    Compare {
        /// Model JSON files (two or more, or one plus --reference)
        #[arg(long, num_args = 1.., required = true)]
        models: Vec<PathBuf>,
        /// Reference model JSON for one-way comparisons
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Comma-separated external metric names
        #[arg(long, default_value = "adjustedRand")]
        metrics: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Draw trajectories or cluster trajectories as SVG
    Plot {
        /// Long-format CSV input (trajectories mode)
        #[arg(long)]
        data: Option<PathBuf>,
        /// Model JSON (enables cluster coloring / cluster-trajectories mode)
        #[arg(long)]
        model: Option<PathBuf>,
        /// trajectories | cluster-trajectories
        #[arg(long, default_value = "trajectories")]
        mode: String,
        /// Output SVG path
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        columns: ColumnOpts,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Bootstrap estimation: resample, fit, and summarize metrics
    Boot {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        method: String,
        #[arg(long, default_value_t = 2)]
        clusters: usize,
        #[arg(long, default_value_t = 10)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = false)]
        parallel: bool,
        #[arg(long, default_value = "converged,Dunn,WMAE")]
        metrics: String,
        #[arg(long = "arg")]
        args: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        columns: ColumnOpts,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Repeated estimation with varying child seeds
    Rep {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        method: String,
        #[arg(long, default_value_t = 2)]
        clusters: usize,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = false)]
        parallel: bool,
        #[arg(long, default_value = "converged,Dunn,WMAE")]
        metrics: String,
        #[arg(long = "arg")]
        args: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        columns: ColumnOpts,
        #[command(flatten)]
        common: CommonOpts,
    },
}

/// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 internal.
pub fn exit_code(err: &trajcluster::Error) -> i32 {
    use trajcluster::Error::*;
    match err {
        UnknownMethod(_) | UnknownArgument { .. } | InvalidSpec(_) | UnknownMetric(_)
        | Infeasible(_) | Capacity { .. } | Rule(_) | Contract(_) | NotFound(_) => 1,
        e if e.is_data_error() => 2,
        _ => 3,
    }
}

/// Parse arguments and run; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are successes; everything else is usage.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}
