use std::path::{Path, PathBuf};

use decorr::data::{SplitSpec, SynthSpec};
use decorr::objective::{LossConfig, Objective};
use decorr::projection::ProjectionMode;
use serde::{Deserialize, Serialize};

use crate::args::{CommonArgs, DataArgs, LossArg, LossArgs, ModelArgs, ProjectionArg, SynthArgs};
use crate::error::{CliError, CliResult};

pub const OUT_DIR_ENV: &str = "DECORR_OUT_DIR";

/// Settings file: flat TOML keyed by the long flag names.
#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub csv: Option<PathBuf>,
    pub ar: Option<Vec<f64>>,
    pub noise_std: Option<f64>,
    pub length: Option<usize>,
    pub variates: Option<usize>,
    pub data_seed: Option<u64>,
    pub lookback: Option<usize>,
    pub horizon: Option<usize>,
    pub split: Option<String>,
    pub stride: Option<usize>,
    pub projection: Option<String>,
    pub standardize_first: Option<bool>,
    pub loss: Option<String>,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub per_variate_weights: Option<bool>,
    pub lr: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub patience: Option<usize>,
    pub seeds: Option<usize>,
    pub params: Option<usize>,
    pub step: Option<f64>,
    pub batch_windows: Option<usize>,
    pub threshold: Option<f64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config file {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::usage(format!("bad config file {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CommonConfig {
    pub out_dir: PathBuf,
    pub seed: u64,
}

pub fn resolve_common(args: &CommonArgs, file: &FileConfig) -> CommonConfig {
    let env = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
    CommonConfig {
        out_dir: args
            .out_dir
            .clone()
            .or(env)
            .or_else(|| file.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out")),
        seed: args.seed.or(file.seed).unwrap_or(0),
    }
}

pub fn resolve_synth(args: &SynthArgs, file: &FileConfig) -> CliResult<SynthSpec> {
    let d = SynthSpec::default();
    let spec = SynthSpec {
        ar: args.ar.clone().or_else(|| file.ar.clone()).unwrap_or(d.ar),
        noise_std: args.noise_std.or(file.noise_std).unwrap_or(d.noise_std),
        length: args.length.or(file.length).unwrap_or(d.length),
        variates: args.variates.or(file.variates).unwrap_or(d.variates),
        seed: args.data_seed.or(file.data_seed).unwrap_or(d.seed),
    };
    spec.validate()?;
    Ok(spec)
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Source {
    Csv { path: PathBuf },
    Synth(SynthSpec),
}

#[derive(Debug, Clone, Serialize)]
pub struct DataConfig {
    pub source: Source,
    pub lookback: usize,
    pub horizon: usize,
    pub split: SplitSpec,
    pub stride: usize,
    pub projection: ProjectionMode,
    pub standardize_first: bool,
}

pub fn resolve_data(args: &DataArgs, file: &FileConfig) -> CliResult<DataConfig> {
    let source = match args.csv.clone().or_else(|| file.csv.clone()) {
        Some(path) => Source::Csv { path },
        None => Source::Synth(resolve_synth(&args.synth, file)?),
    };
    let split = match args.split.as_deref().or(file.split.as_deref()) {
        Some(s) => s.parse()?,
        None => SplitSpec::default(),
    };
    let projection = match args.projection {
        Some(ProjectionArg::Pooled) => ProjectionMode::Pooled,
        Some(ProjectionArg::PerVariate) => ProjectionMode::PerVariate,
        None => match file.projection.as_deref() {
            Some(s) => s.parse()?,
            None => ProjectionMode::Pooled,
        },
    };
    let cfg = DataConfig {
        source,
        lookback: args.lookback.or(file.lookback).unwrap_or(96),
        horizon: args.horizon.or(file.horizon).unwrap_or(96),
        split,
        stride: args.stride.or(file.stride).unwrap_or(1),
        projection,
        standardize_first: args.standardize_first.or(file.standardize_first).unwrap_or(true),
    };
    if cfg.lookback == 0 || cfg.horizon == 0 || cfg.stride == 0 {
        return Err(CliError::usage("lookback, horizon and stride must be positive"));
    }
    Ok(cfg)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LossSettings {
    pub loss: &'static str,
    pub alpha: f64,
    pub gamma: f64,
}

impl LossSettings {
    pub fn objective(&self, horizon: usize) -> CliResult<Objective> {
        Ok(match self.loss {
            "tmse" => Objective::Tmse,
            "fourier" => Objective::fourier(self.alpha)?,
            _ => Objective::Timeo1(LossConfig::new(self.alpha, self.gamma, horizon)?),
        })
    }
}

pub fn resolve_loss(args: &LossArgs, file: &FileConfig) -> CliResult<LossSettings> {
    let loss = match args.loss {
        Some(LossArg::Tmse) => "tmse",
        Some(LossArg::Timeo1) => "timeo1",
        Some(LossArg::Fourier) => "fourier",
        None => match file.loss.as_deref() {
            None | Some("timeo1") => "timeo1",
            Some("tmse") => "tmse",
            Some("fourier") => "fourier",
            Some(other) => {
                return Err(CliError::usage(format!(
                    "unknown loss `{other}` in config file (expected tmse, timeo1 or fourier)"
                )))
            }
        },
    };
    Ok(LossSettings {
        loss,
        alpha: args.alpha.or(file.alpha).unwrap_or(0.7),
        gamma: args.gamma.or(file.gamma).unwrap_or(0.7),
    })
}

pub fn resolve_per_variate_weights(args: &ModelArgs, file: &FileConfig) -> bool {
    args.per_variate_weights || file.per_variate_weights.unwrap_or(false)
}
