//! Forecast objectives and their gradients with respect to the forecast.
//!
//! All losses are entry means: a batch of `m` sequences of length `T`
//! contributes `m * T` terms to TMSE and `m * K` terms to the component loss.

mod fourier;

pub use fourier::{fourier_grad, fourier_loss, DftTable};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};
use crate::projection::{truncation_k, ProjectionBasis};
use crate::scalar::Scalar;

/// Fusion weight `alpha`, involution ratio `gamma` and the derived component count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    alpha: f64,
    gamma: f64,
    k: usize,
}

impl LossConfig {
    pub fn new(alpha: f64, gamma: f64, horizon: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::config(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        let k = truncation_k(gamma, horizon)?;
        Ok(Self { alpha, gamma, k })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

/// Loss value with its two parts: `total = alpha * component + (1 - alpha) * tmse`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossValue<S> {
    pub total: S,
    pub tmse_part: S,
    pub component_part: S,
}

/// Mean squared error over all entries.
pub fn tmse<S: Scalar>(yhat: &Matrix<S>, y: &Matrix<S>) -> Result<S> {
    yhat.ensure_same_shape(y)?;
    let n = S::from_usize_lossy(y.as_slice().len().max(1));
    let sum = yhat
        .as_slice()
        .iter()
        .zip(y.as_slice())
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<S>();
    Ok(sum / n)
}

/// Gradient of [`tmse`]: `2 (yhat - y) / (m T)`.
pub fn tmse_grad<S: Scalar>(yhat: &Matrix<S>, y: &Matrix<S>) -> Result<Matrix<S>> {
    yhat.ensure_same_shape(y)?;
    let scale = S::lit(2.0) / S::from_usize_lossy(y.as_slice().len().max(1));
    yhat.zip_with(y, |a, b| (a - b) * scale)
}

fn component_residual<S: Scalar>(
    yhat: &Matrix<S>,
    y: &Matrix<S>,
    basis: &ProjectionBasis<S>,
    k: usize,
) -> Result<(Matrix<S>, Matrix<S>)> {
    yhat.ensure_same_shape(y)?;
    if y.cols() != basis.horizon() {
        return Err(Error::dim(format!(
            "sequences have {} steps, basis horizon is {}",
            y.cols(),
            basis.horizon()
        )));
    }
    let lead = basis.leading(k)?;
    let z_hat = yhat.matmul(&lead)?;
    let z = y.matmul(&lead)?;
    Ok((z_hat.sub(&z)?, lead))
}

/// Mean absolute difference between the leading `k` components of forecast
/// and label.
pub fn component_loss<S: Scalar>(yhat: &Matrix<S>, y: &Matrix<S>, basis: &ProjectionBasis<S>, k: usize) -> Result<S> {
    let (diff, _) = component_residual(yhat, y, basis, k)?;
    let n = S::from_usize_lossy(diff.as_slice().len().max(1));
    Ok(diff.as_slice().iter().map(|d| d.abs()).sum::<S>() / n)
}

/// Subgradient of [`component_loss`], with `sign(0) = 0`.
pub fn component_grad<S: Scalar>(
    yhat: &Matrix<S>,
    y: &Matrix<S>,
    basis: &ProjectionBasis<S>,
    k: usize,
) -> Result<Matrix<S>> {
    let (diff, lead) = component_residual(yhat, y, basis, k)?;
    let scale = S::one() / S::from_usize_lossy(diff.as_slice().len().max(1));
    let signs = diff.map(|d| sign(d) * scale)?;
    signs.matmul_t(&lead)
}

#[inline]
fn sign<S: Scalar>(x: S) -> S {
    if x > S::zero() {
        S::one()
    } else if x < S::zero() {
        -S::one()
    } else {
        S::zero()
    }
}

/// Smallest `|zhat - z|` over the retained components; gradient checks stay
/// away from small values, where the L1 kink sits.
pub fn kink_distance<S: Scalar>(yhat: &Matrix<S>, y: &Matrix<S>, basis: &ProjectionBasis<S>, k: usize) -> Result<S> {
    let (diff, _) = component_residual(yhat, y, basis, k)?;
    Ok(diff.as_slice().iter().fold(S::infinity(), |a, d| a.min(d.abs())))
}

fn mix<S: Scalar>(alpha: f64, component: S, tmse: S) -> S {
    if alpha == 0.0 {
        tmse
    } else if alpha == 1.0 {
        component
    } else {
        S::lit(alpha) * component + S::lit(1.0 - alpha) * tmse
    }
}

/// `alpha * component_loss + (1 - alpha) * tmse`.
pub fn fused_loss<S: Scalar>(
    yhat: &Matrix<S>,
    y: &Matrix<S>,
    basis: &ProjectionBasis<S>,
    cfg: &LossConfig,
) -> Result<LossValue<S>> {
    let tmse_part = tmse(yhat, y)?;
    let component_part = component_loss(yhat, y, basis, cfg.k)?;
    Ok(LossValue {
        total: mix(cfg.alpha, component_part, tmse_part),
        tmse_part,
        component_part,
    })
}

/// Gradient of [`fused_loss`] with respect to `yhat`.
pub fn fused_grad<S: Scalar>(
    yhat: &Matrix<S>,
    y: &Matrix<S>,
    basis: &ProjectionBasis<S>,
    cfg: &LossConfig,
) -> Result<Matrix<S>> {
    blend_grads(
        cfg.alpha,
        || component_grad(yhat, y, basis, cfg.k),
        || tmse_grad(yhat, y),
    )
}

fn blend_grads<S: Scalar>(
    alpha: f64,
    component: impl FnOnce() -> Result<Matrix<S>>,
    tmse: impl FnOnce() -> Result<Matrix<S>>,
) -> Result<Matrix<S>> {
    if alpha == 0.0 {
        return tmse();
    }
    if alpha == 1.0 {
        return component();
    }
    let a = S::lit(alpha);
    let b = S::lit(1.0 - alpha);
    component()?.zip_with(&tmse()?, |c, t| a * c + b * t)
}

/// Training objective selector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Objective {
    Tmse,
    /// Component loss fused with TMSE.
    Timeo1(LossConfig),
    /// Frequency-domain L1 loss fused with TMSE.
    Fourier { alpha: f64 },
}

impl Objective {
    pub fn fourier(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::config(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        Ok(Self::Fourier { alpha })
    }

    /// Whether evaluating this objective needs a projection basis.
    pub fn needs_basis(&self) -> bool {
        matches!(self, Self::Timeo1(_))
    }

    pub fn loss<S: Scalar>(
        &self,
        yhat: &Matrix<S>,
        y: &Matrix<S>,
        basis: Option<&ProjectionBasis<S>>,
    ) -> Result<LossValue<S>> {
        match self {
            Self::Tmse => {
                let t = tmse(yhat, y)?;
                Ok(LossValue {
                    total: t,
                    tmse_part: t,
                    component_part: S::zero(),
                })
            }
            Self::Timeo1(cfg) => fused_loss(yhat, y, require(basis)?, cfg),
            Self::Fourier { alpha } => {
                let tmse_part = tmse(yhat, y)?;
                let component_part = fourier_loss(yhat, y)?;
                Ok(LossValue {
                    total: mix(*alpha, component_part, tmse_part),
                    tmse_part,
                    component_part,
                })
            }
        }
    }

    pub fn grad<S: Scalar>(
        &self,
        yhat: &Matrix<S>,
        y: &Matrix<S>,
        basis: Option<&ProjectionBasis<S>>,
    ) -> Result<Matrix<S>> {
        match self {
            Self::Tmse => tmse_grad(yhat, y),
            Self::Timeo1(cfg) => fused_grad(yhat, y, require(basis)?, cfg),
            Self::Fourier { alpha } => blend_grads(*alpha, || fourier_grad(yhat, y), || tmse_grad(yhat, y)),
        }
    }
}

fn require<S: Scalar>(basis: Option<&ProjectionBasis<S>>) -> Result<&ProjectionBasis<S>> {
    basis.ok_or_else(|| Error::config("the component objective needs a projection basis"))
}

/// The three terms of the autocorrelation bias for one residual sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasTerms<S> {
    /// `v^T Sigma^-1 v`
    pub mahalanobis: S,
    /// `v^T v`
    pub squared_norm: S,
    /// `log det Sigma`
    pub log_det: S,
    pub bias: S,
}

/// Gap between the Gaussian negative log-likelihood under `sigma` and the
/// step-wise squared error: `v^T Sigma^-1 v - v^T v - log det(Sigma) / 2`.
pub fn autocorrelation_bias<S: Scalar>(residual: &[S], sigma: &Matrix<S>) -> Result<S> {
    Ok(autocorrelation_bias_terms(residual, &Cholesky::factor(sigma)?)?.bias)
}

/// Same as [`autocorrelation_bias`] with a pre-factored covariance.
pub fn autocorrelation_bias_terms<S: Scalar>(residual: &[S], sigma: &Cholesky<S>) -> Result<BiasTerms<S>> {
    let solved = sigma.solve_vec(residual)?;
    let mahalanobis = residual.iter().zip(&solved).map(|(&a, &b)| a * b).sum::<S>();
    let squared_norm = residual.iter().map(|&a| a * a).sum::<S>();
    let log_det = sigma.log_det();
    Ok(BiasTerms {
        mahalanobis,
        squared_norm,
        log_det,
        bias: mahalanobis - squared_norm - S::lit(0.5) * log_det,
    })
}
