use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::LinearForecaster;
use super::train::{batch_objective, loss_and_grad};
use crate::data::{Batch, Split, WindowedDataset};
use crate::error::Result;
use crate::objective::{kink_distance, Objective};
use crate::projection::{BasisSet, ProjectionMode};
use crate::scalar::Scalar;

/// Below this `|zhat - z|` a finite difference may straddle the L1 kink.
pub const KINK_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradCheckOptions {
    /// Parameters compared; the whole model when it has fewer.
    pub params: usize,
    pub step: f64,
    pub seed: u64,
    /// Scales the analytic gradient by 1.05, for testing that a wrong
    /// gradient is caught.
    pub corrupt: bool,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            params: 64,
            step: 1e-5,
            seed: 0,
            corrupt: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub checked: usize,
    /// Euclidean norm of the full analytic gradient.
    pub analytic_norm: f64,
    /// Smallest `|zhat - z|` at the checked point, for component objectives.
    pub kink_distance: Option<f64>,
}

/// Smallest `|zhat - z|` of the model's forecast on `batch`, or `None` when
/// the objective has no L1 component term.
pub fn batch_kink_distance<S: Scalar>(
    model: &LinearForecaster<S>,
    batch: &Batch<S>,
    objective: &Objective,
    bases: Option<&BasisSet<S>>,
) -> Result<Option<f64>> {
    let (Objective::Timeo1(cfg), Some(bases)) = (objective, bases) else {
        return Ok(None);
    };
    if cfg.alpha() == 0.0 {
        return Ok(None);
    }
    let yhat = model.predict(batch)?;
    if bases.mode() == ProjectionMode::Pooled {
        return Ok(Some(kink_distance(&yhat, &batch.labels, bases.for_variate(0), cfg.k())?.as_f64()));
    }
    let variates = batch.variates.iter().max().map_or(0, |&d| d + 1);
    let mut min = f64::INFINITY;
    for (d, rows) in batch.rows_by_variate(variates).iter().enumerate() {
        if rows.is_empty() {
            continue;
        }
        let dist = kink_distance(
            &yhat.select_rows(rows),
            &batch.labels.select_rows(rows),
            bases.for_variate(d),
            cfg.k(),
        )?;
        min = min.min(dist.as_f64());
    }
    Ok(Some(min))
}

/// Compares the analytic parameter gradient with central differences on a
/// seeded random subset of parameters.
///
/// The relative error of one parameter is `|a - n| / max(|a|, |n|, floor)`
/// with `floor = 1e-3 * max |a|` over the whole gradient, so entries that are
/// tiny next to the rest do not dominate through rounding noise.
pub fn grad_check<S: Scalar>(
    model: &LinearForecaster<S>,
    batch: &Batch<S>,
    objective: &Objective,
    bases: Option<&BasisSet<S>>,
    opts: &GradCheckOptions,
) -> Result<GradCheckReport> {
    let (_, mut analytic) = loss_and_grad(model, batch, objective, bases)?;
    if opts.corrupt {
        let f = S::lit(1.05);
        analytic.iter_mut().for_each(|g| *g *= f);
    }
    let analytic_norm = analytic.iter().map(|g| g.as_f64().powi(2)).sum::<f64>().sqrt();
    let scale = analytic.iter().fold(0.0f64, |m, g| m.max(g.as_f64().abs()));
    let floor = (1e-3 * scale).max(f64::MIN_POSITIVE);

    let n = model.param_count();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut picked = sample(&mut rng, n, opts.params.min(n)).into_vec();
    picked.sort_unstable();

    let base = model.params();
    let mut probe = model.clone();
    let mut eval = |params: &[S]| -> Result<f64> {
        probe.set_params(params)?;
        let yhat = probe.predict(batch)?;
        Ok(batch_objective(&yhat, batch, objective, bases)?.0.total.as_f64())
    };
    let mut worst = 0.0f64;
    for &i in &picked {
        let mut p = base.clone();
        p[i] = base[i] + S::lit(opts.step);
        let up = eval(&p)?;
        p[i] = base[i] - S::lit(opts.step);
        let down = eval(&p)?;
        let numeric = (up - down) / (2.0 * opts.step);
        let a = analytic[i].as_f64();
        let denom = a.abs().max(numeric.abs()).max(floor);
        worst = worst.max((a - numeric).abs() / denom);
    }
    Ok(GradCheckReport {
        max_relative_error: worst,
        checked: picked.len(),
        analytic_norm,
        kink_distance: batch_kink_distance(model, batch, objective, bases)?,
    })
}

/// Draws `windows` distinct windows of `split`, redrawing up to `attempts`
/// times until every retained component residual is at least
/// [`KINK_MARGIN`] from zero. Returns `None` when no draw qualifies.
#[allow(clippy::too_many_arguments)]
pub fn kink_free_batch<S: Scalar>(
    ds: &WindowedDataset<S>,
    split: Split,
    model: &LinearForecaster<S>,
    objective: &Objective,
    bases: Option<&BasisSet<S>>,
    windows: usize,
    seed: u64,
    attempts: usize,
) -> Result<Option<Batch<S>>> {
    let n = ds.window_count(split);
    if windows == 0 || windows > n {
        return Err(crate::Error::Config(format!(
            "cannot draw {windows} windows from a split with {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..attempts {
        let mut picks = sample(&mut rng, n, windows).into_vec();
        picks.sort_unstable();
        let batch = ds.batch(split, &picks)?;
        match batch_kink_distance(model, &batch, objective, bases)? {
            Some(d) if d <= KINK_MARGIN => continue,
            _ => return Ok(Some(batch)),
        }
    }
    Ok(None)
}
