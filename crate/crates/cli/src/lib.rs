//! Command-line front-end: synthesize seasons, mine segments, evaluate
//! localization and compare seasons.

pub mod commands;
pub mod error;
pub mod io;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mapseg::multicut::GaecOptions;
use mapseg::pipeline::{EvalConfig, Method, SegmentConfig};
use mapseg::segments::MiningConfig;
use mapseg::trackgraph::{AffinityMode, BuilderConfig};

pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "mapseg", version, about = "Mine minimal map segments and evaluate them as place classes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Bow,
    ClassIndex,
    Oracle,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Bow => Method::Bow,
            MethodArg::ClassIndex => Method::ClassIndex,
            MethodArg::Oracle => Method::Oracle,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AffinityArg {
    Unit,
    CovisibilityCount,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic seasons.
    Synth {
        /// World spec as JSON; omitted fields take their defaults.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Build the graph, partition it and mine segments.
    Segment {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.2)]
        bias_fraction: f64,
        #[arg(long, default_value_t = 5)]
        min_trajectories: usize,
        #[arg(long, value_enum, default_value = "unit")]
        affinity: AffinityArg,
        /// Refine the greedy partition with single-vertex moves.
        #[arg(long)]
        local_moves: bool,
        /// Replace the multicut, e.g. `equal-length=10`.
        #[arg(long)]
        baseline: Option<String>,
    },
    /// Localize a query season against a map season's segments.
    Eval {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        query: PathBuf,
        /// segments.json written by `segment` for the map season.
        #[arg(long)]
        segments: PathBuf,
        #[arg(long, value_enum, default_value = "bow")]
        method: MethodArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        nms_radius: f64,
        #[arg(long, default_value_t = 10.0)]
        correct_radius: f64,
        #[arg(long, default_value_t = 1.0)]
        d_norm: f64,
        #[arg(long, default_value_t = 100.0)]
        start_spacing: f64,
        /// Seed of the visual-word codebook.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Cross-season Jaccard similarity of two segment sets.
    Metrics {
        #[arg(long)]
        segments_a: PathBuf,
        #[arg(long)]
        poses_a: PathBuf,
        #[arg(long)]
        segments_b: PathBuf,
        #[arg(long)]
        poses_b: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        cell: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_baseline(spec: &str) -> CliResult<f64> {
    spec.strip_prefix("equal-length=")
        .and_then(|v| v.parse::<f64>().ok())
        .filter(|v| *v > 0.0)
        .ok_or_else(|| CliError::Usage(format!("--baseline expects equal-length=<meters>, got {spec}")))
}

fn positive(name: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("--{name} must be positive, got {v}")))
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Synth { spec, out, seed } => {
            commands::cmd_synth(spec.as_deref(), &out, seed)?;
        }
        Command::Segment {
            data,
            out,
            bias_fraction,
            min_trajectories,
            affinity,
            local_moves,
            baseline,
        } => {
            if !(bias_fraction > 0.0 && bias_fraction <= 1.0) {
                return Err(CliError::Usage(format!(
                    "--bias-fraction must lie in (0, 1], got {bias_fraction}"
                )));
            }
            if min_trajectories == 0 {
                return Err(CliError::Usage("--min-trajectories must be positive".into()));
            }
            let cfg = SegmentConfig {
                builder: BuilderConfig {
                    affinity: match affinity {
                        AffinityArg::Unit => AffinityMode::Unit,
                        AffinityArg::CovisibilityCount => AffinityMode::CovisibilityCount,
                    },
                    bias_fraction,
                },
                mining: MiningConfig {
                    min_trajectories_per_segment: min_trajectories,
                    ..Default::default()
                },
                gaec: GaecOptions {
                    local_moves,
                    ..Default::default()
                },
                baseline_length: baseline.as_deref().map(parse_baseline).transpose()?,
            };
            commands::cmd_segment(&data, &out, &cfg)?;
        }
        Command::Eval {
            map,
            query,
            segments,
            method,
            out,
            nms_radius,
            correct_radius,
            d_norm,
            start_spacing,
            seed,
        } => {
            let mut cfg = EvalConfig {
                method: method.into(),
                nms_radius: positive("nms-radius", nms_radius)?,
                correct_radius: positive("correct-radius", correct_radius)?,
                d_norm: positive("d-norm", d_norm)?,
                start_spacing: positive("start-spacing", start_spacing)?,
                ..Default::default()
            };
            cfg.bow.seed = seed;
            commands::cmd_eval(&map, &query, &segments, &cfg, &out)?;
        }
        Command::Metrics {
            segments_a,
            poses_a,
            segments_b,
            poses_b,
            cell,
            out,
        } => {
            let cell = positive("cell", cell)?;
            commands::cmd_metrics(&segments_a, &poses_a, &segments_b, &poses_b, cell, &out)?;
        }
    }
    Ok(())
}

/// Parses `args`, runs the command and maps the outcome to an exit status:
/// 0 success, 2 usage, 3 data, 4 internal invariant.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
