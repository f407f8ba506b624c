use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Batch;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Direct multi-step linear map `yhat = W^T x + b` applied to each variate.
///
/// One head is shared by all variates (channel independence); with
/// per-variate weights there is one head per variate.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearForecaster<S: Scalar> {
    lookback: usize,
    horizon: usize,
    heads: Vec<LinearHead<S>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearHead<S: Scalar> {
    /// `H x T`
    pub weights: Matrix<S>,
    /// length `T`
    pub bias: Vec<S>,
}

impl<S: Scalar> LinearForecaster<S> {
    pub fn zeros(lookback: usize, horizon: usize, heads: usize) -> Self {
        Self {
            lookback,
            horizon,
            heads: (0..heads.max(1))
                .map(|_| LinearHead {
                    weights: Matrix::zeros(lookback, horizon),
                    bias: vec![S::zero(); horizon],
                })
                .collect(),
        }
    }

    /// Uniform `[-1/sqrt(H), 1/sqrt(H)]` initialization, deterministic per seed.
    pub fn init(lookback: usize, horizon: usize, heads: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = 1.0 / (lookback.max(1) as f64).sqrt();
        let mut model = Self::zeros(lookback, horizon, heads);
        let params: Vec<S> = (0..model.param_count())
            .map(|_| S::lit(rng.random_range(-bound..bound)))
            .collect();
        model.set_params(&params).expect("parameter count matches");
        model
    }

    pub fn from_heads(lookback: usize, horizon: usize, heads: Vec<LinearHead<S>>) -> Result<Self> {
        if heads.is_empty() {
            return Err(Error::dim("a forecaster needs at least one head"));
        }
        for h in &heads {
            if h.weights.shape() != (lookback, horizon) || h.bias.len() != horizon {
                return Err(Error::dim(format!(
                    "head of shape {:?} / bias {} does not match H={lookback}, T={horizon}",
                    h.weights.shape(),
                    h.bias.len()
                )));
            }
            if h.bias.iter().any(|b| !b.is_finite()) {
                return Err(Error::Numeric("non-finite bias".into()));
            }
        }
        Ok(Self {
            lookback,
            horizon,
            heads,
        })
    }

    pub fn lookback(&self) -> usize {
        self.lookback
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn heads(&self) -> &[LinearHead<S>] {
        &self.heads
    }

    pub fn shared(&self) -> bool {
        self.heads.len() == 1
    }

    pub(crate) fn head_index(&self, variate: usize) -> usize {
        if self.shared() {
            0
        } else {
            variate
        }
    }

    pub fn param_count(&self) -> usize {
        self.heads.len() * (self.lookback * self.horizon + self.horizon)
    }

    /// Flat parameters: each head's weights (row-major) then its bias.
    pub fn params(&self) -> Vec<S> {
        let mut out = Vec::with_capacity(self.param_count());
        for h in &self.heads {
            out.extend_from_slice(h.weights.as_slice());
            out.extend_from_slice(&h.bias);
        }
        out
    }

    pub fn set_params(&mut self, params: &[S]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::dim(format!(
                "{} parameters for a model with {}",
                params.len(),
                self.param_count()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Numeric("non-finite parameter".into()));
        }
        let w = self.lookback * self.horizon;
        for (h, chunk) in self.heads.iter_mut().zip(params.chunks(w + self.horizon)) {
            h.weights.data_mut().copy_from_slice(&chunk[..w]);
            h.bias.copy_from_slice(&chunk[w..]);
        }
        Ok(())
    }

    /// Forecast for one `H x D` window, returned as `T x D`.
    pub fn forecast(&self, window: &Matrix<S>) -> Result<Matrix<S>> {
        if window.rows() != self.lookback {
            return Err(Error::dim(format!(
                "window has {} rows, model lookback is {}",
                window.rows(),
                self.lookback
            )));
        }
        let d = window.cols();
        if !self.shared() && d != self.heads.len() {
            return Err(Error::dim(format!(
                "window has {d} variates, model has {} heads",
                self.heads.len()
            )));
        }
        let mut out = Matrix::zeros(self.horizon, d);
        for v in 0..d {
            let head = &self.heads[self.head_index(v)];
            let yhat = self.apply(head, &window.col(v));
            for (t, &y) in yhat.iter().enumerate() {
                out.set(t, v, y);
            }
        }
        Ok(out)
    }

    fn apply(&self, head: &LinearHead<S>, x: &[S]) -> Vec<S> {
        let mut y = head.bias.clone();
        for (i, &xi) in x.iter().enumerate() {
            for (o, &w) in y.iter_mut().zip(head.weights.row(i)) {
                *o += xi * w;
            }
        }
        y
    }

    /// Forecasts for every row of a batch (`rows x T`).
    pub fn predict(&self, batch: &Batch<S>) -> Result<Matrix<S>> {
        if batch.inputs.cols() != self.lookback {
            return Err(Error::dim(format!(
                "batch inputs have {} steps, model lookback is {}",
                batch.inputs.cols(),
                self.lookback
            )));
        }
        let mut data = Vec::with_capacity(batch.len() * self.horizon);
        for (r, &v) in batch.variates.iter().enumerate() {
            let head = self
                .heads
                .get(self.head_index(v))
                .ok_or_else(|| Error::dim(format!("no head for variate {v}")))?;
            data.extend(self.apply(head, batch.inputs.row(r)));
        }
        Matrix::from_vec(batch.len(), self.horizon, data)
    }

    /// Back-propagates `d loss / d yhat` (`rows x T`) to the flat parameter
    /// layout of [`params`](Self::params).
    pub fn param_grad(&self, batch: &Batch<S>, dyhat: &Matrix<S>) -> Result<Vec<S>> {
        if dyhat.shape() != (batch.len(), self.horizon) {
            return Err(Error::dim("output gradient does not match the batch"));
        }
        let (h, t) = (self.lookback, self.horizon);
        let stride = h * t + t;
        let mut grad = vec![S::zero(); self.param_count()];
        for (r, &v) in batch.variates.iter().enumerate() {
            let base = self.head_index(v) * stride;
            let g = dyhat.row(r);
            for (i, &xi) in batch.inputs.row(r).iter().enumerate() {
                if xi == S::zero() {
                    continue;
                }
                for (o, &gj) in grad[base + i * t..base + (i + 1) * t].iter_mut().zip(g) {
                    *o += xi * gj;
                }
            }
            for (o, &gj) in grad[base + h * t..base + stride].iter_mut().zip(g) {
                *o += gj;
            }
        }
        Ok(grad)
    }
}
