use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::model::LinearForecaster;
use crate::data::{Batch, Split, WindowedDataset};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::objective::{LossValue, Objective};
use crate::projection::{BasisSet, ProjectionMode};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Windows per batch; each window contributes one row per variate.
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
    pub objective: Objective,
    /// Epochs without a validation improvement before stopping.
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 30,
            batch_size: 64,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
            objective: Objective::Tmse,
            patience: 5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.patience == 0 {
            return Err(Error::config("epochs, batch size and patience must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.eps > 0.0) {
            return Err(Error::config("Adam betas must lie in [0, 1) and eps must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_mse: f64,
}

/// Entry-mean errors in standardized space and after de-standardizing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    pub mae: f64,
    pub mse_original: f64,
    pub mae_original: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    /// 1-based; the returned model holds this epoch's parameters.
    pub best_epoch: usize,
    pub best_val_mse: f64,
    pub test: Metrics,
    pub wall_seconds: f64,
    pub train_windows: usize,
    pub batches_per_epoch: usize,
    /// Size of the final batch of each epoch; smaller than `batch_size`
    /// when the window count is not a multiple of it.
    pub last_batch_windows: usize,
    /// Adam updates applied, counting the final short batch of every epoch.
    pub optimizer_steps: usize,
}

/// Objective value on one batch and its gradient with respect to the
/// forecast. With a per-variate basis set each variate's rows are scored
/// against their own basis and weighted by their share of the batch.
pub fn batch_objective<S: Scalar>(
    yhat: &Matrix<S>,
    batch: &Batch<S>,
    objective: &Objective,
    bases: Option<&BasisSet<S>>,
) -> Result<(LossValue<S>, Matrix<S>)> {
    let uses_components = matches!(objective, Objective::Timeo1(c) if c.alpha() > 0.0);
    let per_variate = uses_components && bases.is_some_and(|b| b.mode() == ProjectionMode::PerVariate);
    if !per_variate {
        let basis = bases.map(|b| b.for_variate(0));
        let value = objective.loss(yhat, &batch.labels, basis)?;
        let grad = objective.grad(yhat, &batch.labels, basis)?;
        return Ok((value, grad));
    }
    let bases = bases.expect("checked above");
    let variates = batch.variates.iter().max().map_or(0, |&d| d + 1);
    if variates > bases.bases().len() {
        return Err(Error::dim(format!(
            "batch has {variates} variates, basis set has {}",
            bases.bases().len()
        )));
    }
    let total_rows = S::from_usize_lossy(batch.len());
    let mut value = LossValue {
        total: S::zero(),
        tmse_part: S::zero(),
        component_part: S::zero(),
    };
    let mut grad = Matrix::zeros(yhat.rows(), yhat.cols());
    for (d, rows) in batch.rows_by_variate(variates).iter().enumerate() {
        if rows.is_empty() {
            continue;
        }
        let w = S::from_usize_lossy(rows.len()) / total_rows;
        let yh = yhat.select_rows(rows);
        let y = batch.labels.select_rows(rows);
        let basis = Some(bases.for_variate(d));
        let v = objective.loss(&yh, &y, basis)?;
        value.total += w * v.total;
        value.tmse_part += w * v.tmse_part;
        value.component_part += w * v.component_part;
        let g = objective.grad(&yh, &y, basis)?;
        for (i, &r) in rows.iter().enumerate() {
            for (o, &gi) in grad.row_mut(r).iter_mut().zip(g.row(i)) {
                *o = w * gi;
            }
        }
    }
    Ok((value, grad))
}

/// Loss and flat parameter gradient of `model` on `batch`.
pub fn loss_and_grad<S: Scalar>(
    model: &LinearForecaster<S>,
    batch: &Batch<S>,
    objective: &Objective,
    bases: Option<&BasisSet<S>>,
) -> Result<(LossValue<S>, Vec<S>)> {
    let yhat = model.predict(batch)?;
    let (value, dyhat) = batch_objective(&yhat, batch, objective, bases)?;
    Ok((value, model.param_grad(batch, &dyhat)?))
}

/// Mini-batch Adam with per-epoch shuffling and early stopping on
/// validation MSE. On return `model` holds the best epoch's parameters.
pub fn train<S: Scalar>(
    model: &mut LinearForecaster<S>,
    data: &WindowedDataset<S>,
    bases: Option<&BasisSet<S>>,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    if model.lookback() != data.lookback() || model.horizon() != data.horizon() {
        return Err(Error::dim(format!(
            "model is H={}, T={} but data is H={}, T={}",
            model.lookback(),
            model.horizon(),
            data.lookback(),
            data.horizon()
        )));
    }
    if !model.shared() && model.heads().len() != data.variates() {
        return Err(Error::dim(format!(
            "model has {} heads for {} variates",
            model.heads().len(),
            data.variates()
        )));
    }
    if cfg.objective.needs_basis() {
        let b = bases.ok_or_else(|| Error::config("the component objective needs a projection basis"))?;
        if b.horizon() != data.horizon() {
            return Err(Error::dim(format!(
                "basis horizon {} differs from data horizon {}",
                b.horizon(),
                data.horizon()
            )));
        }
    }
    let n_train = data.window_count(Split::Train);
    if n_train == 0 || data.window_count(Split::Val) == 0 {
        return Err(Error::dim("training needs non-empty train and validation splits"));
    }

    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut opt = Adam::new(model.param_count(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps);
    let mut params = model.params();
    let mut order: Vec<usize> = (0..n_train).collect();
    let val = data.full_batch(Split::Val)?;

    let mut records = Vec::with_capacity(cfg.epochs);
    let mut best = (0usize, f64::INFINITY, params.clone());
    let mut stale = 0;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = data.batch(Split::Train, chunk)?;
            let (value, grad) = loss_and_grad(model, &batch, &cfg.objective, bases)?;
            let loss = value.total.as_f64();
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Training {
                    epoch,
                    message: format!("non-finite loss {loss}"),
                });
            }
            loss_sum += loss * chunk.len() as f64;
            opt.update(&mut params, &grad);
            model.set_params(&params).map_err(|e| Error::Training {
                epoch,
                message: e.to_string(),
            })?;
        }
        let val_mse = batch_metrics(model, &val, data)?.mse;
        if !val_mse.is_finite() {
            return Err(Error::Training {
                epoch,
                message: "non-finite validation MSE".into(),
            });
        }
        records.push(EpochRecord {
            epoch,
            train_loss: loss_sum / n_train as f64,
            val_mse,
        });
        if val_mse < best.1 {
            best = (epoch, val_mse, params.clone());
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    model.set_params(&best.2)?;
    let test = evaluate(model, data, Split::Test)?;
    let last = n_train % cfg.batch_size;
    Ok(TrainReport {
        epochs: records,
        best_epoch: best.0,
        best_val_mse: best.1,
        test,
        wall_seconds: started.elapsed().as_secs_f64(),
        train_windows: n_train,
        batches_per_epoch: n_train.div_ceil(cfg.batch_size),
        last_batch_windows: if last == 0 { cfg.batch_size.min(n_train) } else { last },
        optimizer_steps: opt.steps() as usize,
    })
}

/// Entry-mean MSE and MAE over every window and variate of `split`.
pub fn evaluate<S: Scalar>(model: &LinearForecaster<S>, data: &WindowedDataset<S>, split: Split) -> Result<Metrics> {
    let batch = data.full_batch(split)?;
    batch_metrics(model, &batch, data)
}

fn batch_metrics<S: Scalar>(model: &LinearForecaster<S>, batch: &Batch<S>, data: &WindowedDataset<S>) -> Result<Metrics> {
    let yhat = model.predict(batch)?;
    let stds = &data.stats().stds;
    let (mut se, mut ae, mut se_o, mut ae_o) = (0.0, 0.0, 0.0, 0.0);
    for (r, &d) in batch.variates.iter().enumerate() {
        let s = stds[d].as_f64();
        for (&a, &b) in yhat.row(r).iter().zip(batch.labels.row(r)) {
            let e = (a - b).as_f64();
            se += e * e;
            ae += e.abs();
            se_o += (e * s) * (e * s);
            ae_o += (e * s).abs();
        }
    }
    let n = (batch.len() * model.horizon()).max(1) as f64;
    Ok(Metrics {
        mse: se / n,
        mae: ae / n,
        mse_original: se_o / n,
        mae_original: ae_o / n,
    })
}
