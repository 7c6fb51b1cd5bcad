use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use unmix::analyze::{Direction, DEFAULT_FOLD_CHANGE};
use unmix::markers::{EpsilonMode, MarkerConfig};
use unmix::pipeline::PipelineConfig;
use unmix::preprocess::{NormMethod, PreprocessConfig};
use unmix::NormKind;

#[derive(Debug, Parser)]
#[command(
    name = "unmix",
    version,
    about = "Unsupervised deconvolution of two-source mixed expression data"
)]
pub struct Cli {
    /// Only report errors.
    #[arg(long, short, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded synthetic mixture with its ground truth.
    Simulate(SimulateArgs),
    /// Estimate proportions and pure profiles from two mixed samples.
    Deconvolve(DeconvolveArgs),
    /// Score a deconvolution result against a truth sidecar.
    Evaluate(EvaluateArgs),
    /// Rank genes by their between-sample expression ratio.
    Derank(DerankArgs),
    /// Draw the two-sample scatter plot as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Json,
    Tsv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NormArg {
    Mean,
    Mode,
    None,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NormKindArg {
    L1,
    L2,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EpsilonModeArg {
    Absolute,
    Relative,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DirectionArg {
    Descending,
    Ascending,
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,

    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    pub report: ReportFormat,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[arg(long, value_enum, default_value_t = NormArg::Mean)]
    pub norm: NormArg,

    /// Norm used for gene filtering and marker standardization.
    #[arg(long, value_enum, default_value_t = NormKindArg::L2)]
    pub norm_kind: NormKindArg,

    /// Minimum gene norm [default: 2nd percentile].
    #[arg(long)]
    pub delta: Option<f64>,

    /// Maximum gene norm [default: 99.8th percentile].
    #[arg(long)]
    pub gamma: Option<f64>,

    /// Histogram bins for mode normalization.
    #[arg(long, default_value_t = 64)]
    pub mode_bins: usize,
}

impl PreprocessArgs {
    pub fn config(&self) -> PreprocessConfig {
        PreprocessConfig {
            norm_method: match self.norm {
                NormArg::Mean => NormMethod::Mean,
                NormArg::Mode => NormMethod::Mode,
                NormArg::None => NormMethod::None,
            },
            delta: self.delta,
            gamma: self.gamma,
            norm_kind: match self.norm_kind {
                NormKindArg::L1 => NormKind::L1,
                NormKindArg::L2 => NormKind::L2,
            },
            mode_bins: self.mode_bins,
        }
    }
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub preprocess: PreprocessArgs,

    /// Marker band width around the extreme ratios.
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,

    #[arg(long, value_enum, default_value_t = EpsilonModeArg::Relative)]
    pub epsilon_mode: EpsilonModeArg,

    /// Minimum markers required per source.
    #[arg(long, default_value_t = 1)]
    pub min_markers: usize,

    /// Set negative source estimates to zero (default).
    #[arg(long, overrides_with = "no_clamp")]
    pub clamp: bool,

    /// Keep negative source estimates.
    #[arg(long)]
    pub no_clamp: bool,
}

impl PipelineArgs {
    pub fn config(&self) -> PipelineConfig {
        PipelineConfig {
            preprocess: self.preprocess.config(),
            markers: MarkerConfig {
                epsilon: self.epsilon,
                epsilon_mode: match self.epsilon_mode {
                    EpsilonModeArg::Absolute => EpsilonMode::Absolute,
                    EpsilonModeArg::Relative => EpsilonMode::Relative,
                },
                min_markers_per_source: self.min_markers,
            },
            clamp: !self.no_clamp,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 2000)]
    pub genes: usize,

    /// Marker genes planted for tissue 1.
    #[arg(long, default_value_t = 5)]
    pub markers1: usize,

    /// Marker genes planted for tissue 2.
    #[arg(long, default_value_t = 5)]
    pub markers2: usize,

    /// Proportion matrix, row-major: a11,a12,a21,a22.
    #[arg(long, value_delimiter = ',', num_args = 4, default_values_t = [0.75, 0.25, 0.25, 0.75])]
    pub mixing: Vec<f64>,

    /// Multiplicative lognormal noise scale.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,

    /// Relative per-sample marker deviation (below 0.5).
    #[arg(long, default_value_t = 0.0)]
    pub sample_dev: f64,

    /// Off-source marker expression as a fraction of the on-source value.
    #[arg(long, default_value_t = 0.0)]
    pub leak: f64,

    /// Pure-ratio threshold for the DE truth labels.
    #[arg(long, default_value_t = DEFAULT_FOLD_CHANGE)]
    pub fold_change: f64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DeconvolveArgs {
    /// Two-sample expression table (tab or comma separated).
    pub input: PathBuf,

    /// Truth sidecar; adds the error against the true mixing to the report.
    #[arg(long)]
    pub truth: Option<PathBuf>,

    #[command(flatten)]
    pub pipeline: PipelineArgs,

    #[command(flatten)]
    pub output: OutArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory written by `deconvolve`.
    pub result: PathBuf,

    /// Truth sidecar written by `simulate`.
    pub truth: PathBuf,

    #[command(flatten)]
    pub output: OutArgs,
}

#[derive(Debug, Args)]
pub struct DerankArgs {
    pub input: PathBuf,

    #[arg(long, value_enum, default_value_t = DirectionArg::Descending)]
    pub direction: DirectionArg,

    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

impl DerankArgs {
    pub fn direction(&self) -> Direction {
        match self.direction {
            DirectionArg::Descending => Direction::Descending,
            DirectionArg::Ascending => Direction::Ascending,
        }
    }
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    pub input: PathBuf,

    /// Directory written by `deconvolve`; overlays its radii and markers.
    #[arg(long)]
    pub result: Option<PathBuf>,

    #[command(flatten)]
    pub preprocess: PreprocessArgs,

    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}
