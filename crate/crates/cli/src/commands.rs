use std::path::Path;

use decorr::data::{load_csv, make_windows, split_chronological, synth_ar, write_csv, Split, SeriesFrame, WindowedDataset};
use decorr::diagnostics::{
    dml_partial_correlation, pearson_correlation, scaling_bench, variance_profile, bias_summary, BenchRow,
    CorrelationKind, CorrelationMatrix, DmlTarget, Estimator, ScalingBench,
};
use decorr::forecast::{
    evaluate, grad_check, kink_free_batch, train as fit_model, Checkpoint, GradCheckOptions, LinearForecaster, TrainConfig,
    TrainReport, KINK_MARGIN,
};
use decorr::objective::Objective;
use decorr::projection::{decorrelation_report, transform, BasisSet, ProjectionMode};
use serde::Serialize;
use serde_json::json;

use crate::args::{CompareArg, DecomposeCmd, DiagnoseCmd, GradcheckCmd, SplitArg, SynthCmd, TrainCmd};
use crate::config::{
    resolve_common, resolve_data, resolve_loss, resolve_per_variate_weights, resolve_synth, DataConfig, FileConfig,
    Source,
};
use crate::error::{CliError, CliResult};
use crate::output::{Staging, SCHEMA_VERSION};

/// Prints a line, ignoring a closed stdout.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

/// Largest off-diagonal component correlation accepted by `decompose`.
const DECORRELATION_LIMIT: f64 = 1e-8;
const GRADCHECK_ATTEMPTS: usize = 100;

fn load_frame(cfg: &DataConfig) -> CliResult<SeriesFrame<f64>> {
    Ok(match &cfg.source {
        Source::Csv { path } => load_csv(path)?,
        Source::Synth(spec) => synth_ar(spec)?,
    })
}

fn load_dataset(cfg: &DataConfig) -> CliResult<WindowedDataset<f64>> {
    let frame = load_frame(cfg)?;
    let bounds = split_chronological(frame.len(), &cfg.split, cfg.lookback + cfg.horizon)?;
    Ok(make_windows(frame, bounds, cfg.lookback, cfg.horizon, cfg.stride)?)
}

fn fit_bases(ds: &WindowedDataset<f64>, cfg: &DataConfig) -> CliResult<BasisSet<f64>> {
    let labels = ds.label_matrix(Split::Train, cfg.projection)?;
    Ok(BasisSet::fit(&labels, cfg.projection, cfg.standardize_first)?)
}

fn write_with<F>(staging: &mut Staging, name: &str, f: F) -> CliResult<()>
where
    F: FnOnce(&mut dyn std::io::Write) -> decorr::Result<()>,
{
    let mut w = staging.writer(name)?;
    f(&mut w)?;
    std::io::Write::flush(&mut w).map_err(|e| CliError::data(format!("cannot write {name}: {e}")))
}

fn report_written(paths: &[std::path::PathBuf]) {
    for p in paths {
        say!("wrote {}", p.display());
    }
}

pub fn synth(cmd: &SynthCmd) -> CliResult<()> {
    let file = FileConfig::load(cmd.common.config.as_deref())?;
    let common = resolve_common(&cmd.common, &file);
    let spec = resolve_synth(&cmd.synth, &file)?;
    let frame: SeriesFrame<f64> = synth_ar(&spec)?;
    let mut staging = Staging::new(&common.out_dir)?;
    write_with(&mut staging, "synth.csv", |w| write_csv(&frame, w))?;
    report_written(&staging.commit()?);
    Ok(())
}

#[derive(Serialize)]
struct BasisEntry {
    variate: Option<usize>,
    components: usize,
    decorrelation: f64,
    orthonormality_error: f64,
    variances: Vec<f64>,
    captured: Vec<decorr::diagnostics::CapturedVariance>,
    component_mean_abs_correlation: f64,
}

pub fn decompose(cmd: &DecomposeCmd) -> CliResult<()> {
    let file = FileConfig::load(cmd.common.config.as_deref())?;
    let common = resolve_common(&cmd.common, &file);
    let data = resolve_data(&cmd.data, &file)?;
    let ds = load_dataset(&data)?;
    let bases = fit_bases(&ds, &data)?;
    let labels = ds.label_matrix(Split::Train, data.projection)?;

    let mut staging = Staging::new(&common.out_dir)?;
    staging.json_raw("basis.json", &bases.to_json()?)?;
    let per_variate = bases.mode() == ProjectionMode::PerVariate;
    let mut entries = Vec::new();
    for (i, (basis, y)) in bases.bases().iter().zip(&labels).enumerate() {
        let comps = transform(basis, &basis.prepare(y)?, basis.horizon())?;
        let decorrelation = decorrelation_report(&comps)?;
        let profile = variance_profile(&comps)?;
        let corr = CorrelationMatrix {
            values: pearson_correlation(&comps.z)?,
            kind: CorrelationKind::Components,
            estimator: Estimator::Pearson,
        };
        let suffix = if per_variate { format!("_v{i}") } else { String::new() };
        write_with(&mut staging, &format!("variance_profile{suffix}.csv"), |w| profile.write_csv(w))?;
        write_with(&mut staging, &format!("gamma_sweep{suffix}.csv"), |w| profile.write_gamma_csv(w))?;
        write_with(&mut staging, &format!("component_correlation{suffix}.csv"), |w| corr.write_csv(w))?;
        say!(
            "basis {}: max |corr| between components {decorrelation:.3e}, orthonormality error {:.3e}",
            if per_variate { format!("v{i}") } else { "pooled".into() },
            basis.orthonormality_error()
        );
        entries.push(BasisEntry {
            variate: per_variate.then_some(i),
            components: comps.k,
            decorrelation,
            orthonormality_error: basis.orthonormality_error(),
            variances: profile.variances.clone(),
            captured: profile.captured.clone(),
            component_mean_abs_correlation: corr.mean_abs_off_diagonal(),
        });
    }
    let worst = entries.iter().map(|e| e.decorrelation).fold(0.0, f64::max);
    let passed = worst < DECORRELATION_LIMIT;
    staging.json(
        "decompose.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "command": "decompose",
            "config": { "common": common, "data": data },
            "fingerprint": bases.fingerprint()?,
            "train_windows": ds.window_count(Split::Train),
            "decorrelation_limit": DECORRELATION_LIMIT,
            "max_decorrelation": worst,
            "passed": passed,
            "bases": entries,
        }),
    )?;
    report_written(&staging.commit()?);
    if !passed {
        return Err(CliError::invariant(format!(
            "components are correlated: max |corr| {worst:.3e} exceeds {DECORRELATION_LIMIT:e}"
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct SeedRun {
    seed: u64,
    report: TrainReport,
    baseline: Option<TrainReport>,
    delta_mse: Option<f64>,
    delta_mae: Option<f64>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn train(cmd: &TrainCmd) -> CliResult<()> {
    let file = FileConfig::load(cmd.common.config.as_deref())?;
    let common = resolve_common(&cmd.common, &file);
    let data = resolve_data(&cmd.data, &file)?;
    let loss = resolve_loss(&cmd.loss, &file)?;
    let per_variate_weights = resolve_per_variate_weights(&cmd.model, &file);
    let objective = loss.objective(data.horizon)?;
    let d = TrainConfig::default();
    let base_cfg = TrainConfig {
        learning_rate: cmd.lr.or(file.lr).unwrap_or(d.learning_rate),
        epochs: cmd.epochs.or(file.epochs).unwrap_or(d.epochs),
        batch_size: cmd.batch_size.or(file.batch_size).unwrap_or(d.batch_size),
        patience: cmd.patience.or(file.patience).unwrap_or(d.patience),
        objective,
        ..d
    };
    base_cfg.validate()?;
    let seeds = cmd.seeds.or(file.seeds).unwrap_or(1);
    if seeds == 0 {
        return Err(CliError::usage("--seeds must be at least 1"));
    }

    let ds = load_dataset(&data)?;
    let bases = if objective.needs_basis() { Some(fit_bases(&ds, &data)?) } else { None };
    let heads = if per_variate_weights { ds.variates() } else { 1 };

    let mut runs = Vec::with_capacity(seeds);
    let mut first_model = None;
    for seed in common.seed..common.seed + seeds as u64 {
        let cfg = TrainConfig { seed, ..base_cfg };
        let mut model = LinearForecaster::init(data.lookback, data.horizon, heads, seed);
        let report = fit_model(&mut model, &ds, bases.as_ref(), &cfg)?;
        let baseline = match cmd.compare {
            Some(CompareArg::Tmse) => {
                let cfg = TrainConfig {
                    objective: Objective::Tmse,
                    ..cfg
                };
                let mut base = LinearForecaster::init(data.lookback, data.horizon, heads, seed);
                Some(fit_model(&mut base, &ds, None, &cfg)?)
            }
            None => None,
        };
        say!(
            "seed {seed}: test MSE {:.6}, MAE {:.6} (best epoch {}){}",
            report.test.mse,
            report.test.mae,
            report.best_epoch,
            baseline
                .as_ref()
                .map(|b| format!("; baseline MSE {:.6}, delta {:+.6}", b.test.mse, report.test.mse - b.test.mse))
                .unwrap_or_default()
        );
        runs.push(SeedRun {
            seed,
            delta_mse: baseline.as_ref().map(|b| report.test.mse - b.test.mse),
            delta_mae: baseline.as_ref().map(|b| report.test.mae - b.test.mae),
            report,
            baseline,
        });
        first_model.get_or_insert(model);
    }

    let model = first_model.expect("at least one seed");
    let checkpoint = Checkpoint {
        model,
        stats: ds.stats().clone(),
        basis_fingerprint: bases.as_ref().map(|b| b.fingerprint()).transpose()?,
    };
    let mut staging = Staging::new(&common.out_dir)?;
    staging.json_raw("checkpoint.json", &checkpoint.to_json()?)?;
    let summary = json!({
        "seeds": seeds,
        "mean_test_mse": mean(runs.iter().map(|r| r.report.test.mse)),
        "mean_test_mae": mean(runs.iter().map(|r| r.report.test.mae)),
        "mean_baseline_test_mse": mean(runs.iter().filter_map(|r| r.baseline.as_ref().map(|b| b.test.mse))),
        "mean_baseline_test_mae": mean(runs.iter().filter_map(|r| r.baseline.as_ref().map(|b| b.test.mae))),
        "mean_delta_mse": mean(runs.iter().filter_map(|r| r.delta_mse)),
        "mean_delta_mae": mean(runs.iter().filter_map(|r| r.delta_mae)),
    });
    staging.json(
        "report.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "command": "train",
            "config": {
                "common": common,
                "data": data,
                "loss": loss,
                "objective": objective,
                "per_variate_weights": per_variate_weights,
                "train": base_cfg,
                "compare": cmd.compare.map(|_| "tmse"),
            },
            "basis_fingerprint": checkpoint.basis_fingerprint,
            "runs": runs,
            "summary": summary,
        }),
    )?;
    report_written(&staging.commit()?);
    Ok(())
}

fn correlation_summary(c: &CorrelationMatrix<f64>) -> serde_json::Value {
    json!({
        "size": c.size(),
        "mean_abs_off_diagonal": c.mean_abs_off_diagonal(),
        "max_abs_off_diagonal": c.max_abs_off_diagonal(),
        "fraction_above_0.25": c.fraction_above(0.25),
    })
}

fn load_checkpoint(path: &Path, ds: &WindowedDataset<f64>) -> CliResult<LinearForecaster<f64>> {
    let ck = Checkpoint::<f64>::load(path)?;
    if ck.model.lookback() != ds.lookback() || ck.model.horizon() != ds.horizon() {
        return Err(CliError::usage(format!(
            "checkpoint is for H={}, T={} but the data uses H={}, T={}",
            ck.model.lookback(),
            ck.model.horizon(),
            ds.lookback(),
            ds.horizon()
        )));
    }
    if !ck.model.shared() && ck.model.heads().len() != ds.variates() {
        return Err(CliError::usage(format!(
            "checkpoint has {} heads, the data has {} variates",
            ck.model.heads().len(),
            ds.variates()
        )));
    }
    Ok(ck.model)
}

pub fn diagnose(cmd: &DiagnoseCmd) -> CliResult<()> {
    let file = FileConfig::load(cmd.common.config.as_deref())?;
    let common = resolve_common(&cmd.common, &file);
    let data = resolve_data(&cmd.data, &file)?;
    let split = match cmd.on.unwrap_or(SplitArg::Train) {
        SplitArg::Train => Split::Train,
        SplitArg::Val => Split::Val,
        SplitArg::Test => Split::Test,
    };
    let bench_m = cmd.bench_m.unwrap_or(32_768);
    let bench_t = cmd.bench_t.clone().unwrap_or_else(|| vec![64, 128, 256, 512]);
    let bench_ms = cmd.bench_ms.clone().unwrap_or_else(|| vec![8192, 16_384, 32_768, 65_536]);
    let bench_repeats = cmd.bench_repeats.unwrap_or(5);

    let ds = load_dataset(&data)?;
    let model = match &cmd.checkpoint {
        Some(path) => load_checkpoint(path, &ds)?,
        None => LinearForecaster::zeros(data.lookback, data.horizon, 1),
    };
    let bases = fit_bases(&ds, &data)?;
    let labels = dml_partial_correlation(&ds, split, DmlTarget::Labels, None)?;
    let comps = dml_partial_correlation(&ds, split, DmlTarget::Components, Some(&bases))?;
    let bias = bias_summary(&ds, split, &model)?;
    say!(
        "label steps: mean |partial corr| {:.4}; components: {:.4}",
        labels.mean_abs_off_diagonal(),
        comps.mean_abs_off_diagonal()
    );
    say!("mean autocorrelation bias {:.4}", bias.mean_bias);

    let bench = if cmd.bench {
        let mut t_sizes: Vec<(usize, usize)> = bench_t.iter().map(|&t| (bench_m, t)).collect();
        let mut m_sizes: Vec<(usize, usize)> = bench_ms.iter().map(|&m| (m, 96)).collect();
        t_sizes.sort_unstable();
        m_sizes.sort_unstable();
        let by_t = scaling_bench::<f64>(&t_sizes, bench_repeats, common.seed)?;
        let by_m = scaling_bench::<f64>(&m_sizes, bench_repeats, common.seed)?;
        let slope_t = by_t.slope_in_t(bench_m);
        let slope_m = by_m.slope_in_m(96);
        let mut rows: Vec<BenchRow> = by_t.rows;
        rows.extend(by_m.rows);
        say!(
            "fit_projection scaling: slope in T {} (m = {bench_m}), slope in m {} (T = 96)",
            fmt_slope(slope_t),
            fmt_slope(slope_m)
        );
        Some((ScalingBench { rows }, slope_t, slope_m))
    } else {
        None
    };

    let mut staging = Staging::new(&common.out_dir)?;
    write_with(&mut staging, "dml_labels.csv", |w| labels.write_csv(w))?;
    write_with(&mut staging, "dml_components.csv", |w| comps.write_csv(w))?;
    staging.json("bias_summary.json", &bias)?;
    if let Some((b, _, _)) = &bench {
        write_with(&mut staging, "scaling_bench.csv", |w| b.write_csv(w))?;
    }
    staging.json(
        "diagnose.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "command": "diagnose",
            "config": {
                "common": common,
                "data": data,
                "split": split,
                "checkpoint": cmd.checkpoint,
            },
            "dml": {
                "labels": correlation_summary(&labels),
                "components": correlation_summary(&comps),
            },
            "bias": bias,
            "bench": bench.as_ref().map(|(b, st, sm)| json!({
                "repeats": bench_repeats,
                "rows": b.rows,
                "slope_in_t": st,
                "slope_in_m": sm,
            })),
        }),
    )?;
    report_written(&staging.commit()?);
    Ok(())
}

fn fmt_slope(s: Option<f64>) -> String {
    s.map(|v| format!("{v:.2}")).unwrap_or_else(|| "n/a".into())
}

pub fn gradcheck(cmd: &GradcheckCmd) -> CliResult<()> {
    let file = FileConfig::load(cmd.common.config.as_deref())?;
    let common = resolve_common(&cmd.common, &file);
    let data = resolve_data(&cmd.data, &file)?;
    let loss = resolve_loss(&cmd.loss, &file)?;
    let per_variate_weights = resolve_per_variate_weights(&cmd.model, &file);
    let objective = loss.objective(data.horizon)?;
    let d = GradCheckOptions::default();
    let opts = GradCheckOptions {
        params: cmd.params.or(file.params).unwrap_or(d.params),
        step: cmd.step.or(file.step).unwrap_or(d.step),
        seed: common.seed,
        corrupt: cmd.corrupt_gradient,
    };
    if !(opts.step > 0.0) || opts.params == 0 {
        return Err(CliError::usage("--step must be positive and --params at least 1"));
    }
    let windows = cmd.batch_windows.or(file.batch_windows).unwrap_or(4);
    let alpha = match objective {
        Objective::Tmse => 0.0,
        Objective::Timeo1(c) => c.alpha(),
        Objective::Fourier { alpha } => alpha,
    };
    let threshold = cmd
        .threshold
        .or(file.threshold)
        .unwrap_or(if alpha == 0.0 { 1e-6 } else { 1e-4 });

    let ds = load_dataset(&data)?;
    let bases = if objective.needs_basis() { Some(fit_bases(&ds, &data)?) } else { None };
    let heads = if per_variate_weights { ds.variates() } else { 1 };
    let model = LinearForecaster::init(data.lookback, data.horizon, heads, common.seed);
    let batch = kink_free_batch(
        &ds,
        Split::Train,
        &model,
        &objective,
        bases.as_ref(),
        windows,
        common.seed,
        GRADCHECK_ATTEMPTS,
    )?
    .ok_or_else(|| {
        CliError::invariant(format!(
            "no batch of {windows} windows keeps every component residual {KINK_MARGIN:e} away from zero \
             after {GRADCHECK_ATTEMPTS} draws"
        ))
    })?;
    let report = grad_check(&model, &batch, &objective, bases.as_ref(), &opts)?;
    let passed = report.max_relative_error <= threshold;
    say!(
        "max relative error {:.3e} over {} parameters (threshold {threshold:e}): {}",
        report.max_relative_error,
        report.checked,
        if passed { "pass" } else { "FAIL" }
    );
    let mut staging = Staging::new(&common.out_dir)?;
    staging.json(
        "gradcheck.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "command": "gradcheck",
            "config": {
                "common": common,
                "data": data,
                "loss": loss,
                "objective": objective,
                "per_variate_weights": per_variate_weights,
                "options": opts,
                "batch_windows": windows,
            },
            "threshold": threshold,
            "passed": passed,
            "report": report,
            "train_mse_at_init": evaluate(&model, &ds, Split::Train)?.mse,
        }),
    )?;
    report_written(&staging.commit()?);
    if !passed {
        return Err(CliError::invariant(format!(
            "gradient check failed: max relative error {:.3e} exceeds {threshold:e}",
            report.max_relative_error
        )));
    }
    Ok(())
}
