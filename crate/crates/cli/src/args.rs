use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "decorr", version)]
#[command(about = "Decorrelated forecast objectives: fit label bases, train linear forecasters, diagnose label autocorrelation")]
#[command(long_about = "Fit an orthogonal label basis by SVD, train a linear direct forecaster on the \
component loss fused with TMSE, and export diagnostics.

Settings resolve as: built-in defaults < config file (--config, flat TOML with the \
long flag names as keys) < DECORR_OUT_DIR (output directory only) < command-line flags.

Exit codes: 0 success, 1 usage or configuration error, 2 data error, 3 numeric failure or \
violated invariant.")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate an autoregressive series and write it as CSV (synth.csv)
    Synth(SynthCmd),
    /// Fit the projection basis and export basis, variance profile and correlations
    Decompose(DecomposeCmd),
    /// Train a linear forecaster and write checkpoint.json and report.json
    Train(TrainCmd),
    /// Export DML correlation matrices, the bias summary and optionally a scaling bench
    Diagnose(DiagnoseCmd),
    /// Compare analytic and finite-difference parameter gradients
    Gradcheck(GradcheckCmd),
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// Flat TOML file of settings keyed by long flag name
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Output directory [default: out; env: DECORR_OUT_DIR]
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    /// Seed for model initialization, shuffling and sampling [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SynthArgs {
    /// Comma-separated AR coefficients [default: 0.9]
    #[arg(long, value_name = "PHI,..", value_delimiter = ',', allow_negative_numbers = true)]
    pub ar: Option<Vec<f64>>,

    /// Innovation standard deviation [default: 1]
    #[arg(long)]
    pub noise_std: Option<f64>,

    /// Series length after burn-in [default: 10000]
    #[arg(long)]
    pub length: Option<usize>,

    /// Number of independent variates [default: 1]
    #[arg(long)]
    pub variates: Option<usize>,

    /// Seed of the simulated series [default: 0]
    #[arg(long)]
    pub data_seed: Option<u64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct DataArgs {
    /// ETT-style CSV to read instead of simulating a series
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,

    #[command(flatten)]
    pub synth: SynthArgs,

    /// Lookback length H [default: 96]
    #[arg(long, short = 'H')]
    pub lookback: Option<usize>,

    /// Forecast horizon T, e.g. 96, 192, 336 or 720 [default: 96]
    #[arg(long, short = 'T')]
    pub horizon: Option<usize>,

    /// Split: `ett-hourly`, `ett-minute` or train,val,test ratios [default: 0.7,0.1,0.2]
    #[arg(long, value_name = "SPEC")]
    pub split: Option<String>,

    /// Step between window starts [default: 1]
    #[arg(long)]
    pub stride: Option<usize>,

    /// Basis per variate or pooled over variates [default: pooled]
    #[arg(long, value_enum)]
    pub projection: Option<ProjectionArg>,

    /// Column-standardize labels before the SVD; `false` fits the raw-label variant [default: true]
    #[arg(long, value_name = "BOOL")]
    pub standardize_first: Option<bool>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionArg {
    Pooled,
    PerVariate,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossArg {
    Tmse,
    Timeo1,
    Fourier,
}

#[derive(Args, Debug, Clone, Default)]
pub struct LossArgs {
    /// Training objective [default: timeo1]
    #[arg(long, value_enum)]
    pub loss: Option<LossArg>,

    /// Weight of the component (or frequency) term, in [0, 1] [default: 0.7]
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Share of components kept, K = round(gamma T), in (0, 1] [default: 0.7]
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ModelArgs {
    /// One weight matrix per variate instead of a shared one [default: false]
    #[arg(long)]
    pub per_variate_weights: bool,
}

#[derive(Args, Debug)]
pub struct SynthCmd {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub synth: SynthArgs,
}

#[derive(Args, Debug)]
pub struct DecomposeCmd {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Args, Debug)]
pub struct TrainCmd {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub loss: LossArgs,
    #[command(flatten)]
    pub model: ModelArgs,

    /// Adam learning rate [default: 0.001]
    #[arg(long)]
    pub lr: Option<f64>,

    /// Maximum epochs [default: 30]
    #[arg(long)]
    pub epochs: Option<usize>,

    /// Windows per batch [default: 64]
    #[arg(long)]
    pub batch_size: Option<usize>,

    /// Epochs without validation improvement before stopping [default: 5]
    #[arg(long)]
    pub patience: Option<usize>,

    /// Also train a paired baseline under the same seed and report the delta
    #[arg(long, value_enum, value_name = "BASELINE")]
    pub compare: Option<CompareArg>,

    /// Number of consecutive seeds to run, starting at --seed [default: 1]
    #[arg(long)]
    pub seeds: Option<usize>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareArg {
    Tmse,
}

#[derive(Args, Debug)]
pub struct DiagnoseCmd {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub data: DataArgs,

    /// Split the diagnostics are computed on [default: train]
    #[arg(long, value_enum)]
    pub on: Option<SplitArg>,

    /// Checkpoint whose residuals feed the bias summary; without one the
    /// residuals are the standardized labels (a zero forecast)
    #[arg(long, value_name = "FILE")]
    pub checkpoint: Option<PathBuf>,

    /// Also time fit_projection over a size grid and write scaling_bench.csv
    #[arg(long)]
    pub bench: bool,

    /// Rows m for the bench sweep over T [default: 32768]
    #[arg(long)]
    pub bench_m: Option<usize>,

    /// Horizons for the bench sweep over T [default: 64,128,256,512]
    #[arg(long, value_delimiter = ',')]
    pub bench_t: Option<Vec<usize>>,

    /// Row counts for the bench sweep over m at T = 96 [default: 8192,16384,32768,65536]
    #[arg(long, value_delimiter = ',')]
    pub bench_ms: Option<Vec<usize>>,

    /// Timed repeats per bench size; the median is kept [default: 5]
    #[arg(long)]
    pub bench_repeats: Option<usize>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitArg {
    Train,
    Val,
    Test,
}

#[derive(Args, Debug)]
pub struct GradcheckCmd {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub loss: LossArgs,
    #[command(flatten)]
    pub model: ModelArgs,

    /// Number of parameters compared [default: 64]
    #[arg(long)]
    pub params: Option<usize>,

    /// Central-difference step [default: 1e-5]
    #[arg(long)]
    pub step: Option<f64>,

    /// Training windows in the checked batch [default: 4]
    #[arg(long)]
    pub batch_windows: Option<usize>,

    /// Failure threshold on the max relative error [default: 1e-6 at alpha 0, else 1e-4]
    #[arg(long)]
    pub threshold: Option<f64>,

    #[arg(long, hide = true)]
    pub corrupt_gradient: bool,
}
