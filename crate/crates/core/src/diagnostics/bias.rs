use serde::{Deserialize, Serialize};

use crate::data::{Split, WindowedDataset};
use crate::error::{Error, Result};
use crate::forecast::LinearForecaster;
use crate::linalg::{Cholesky, Matrix};
use crate::objective::autocorrelation_bias_terms;
use crate::scalar::Scalar;

use super::center_columns;

/// Weight moved from the sample covariance onto its diagonal.
pub const SHRINKAGE: f64 = 0.1;

/// Mean autocorrelation bias over residual rows, with its parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasSummary {
    pub windows: usize,
    pub horizon: usize,
    pub shrinkage: f64,
    pub mean_bias: f64,
    pub mean_mahalanobis: f64,
    pub mean_squared_norm: f64,
    /// `mean_mahalanobis - mean_squared_norm`
    pub quadratic_gap: f64,
    /// `-log det(Sigma) / 2`
    pub log_det_term: f64,
}

/// `(1 - SHRINKAGE) S + SHRINKAGE diag(S)` for the population covariance `S`
/// of the residual rows.
pub fn residual_covariance<S: Scalar>(residuals: &Matrix<S>) -> Result<Matrix<S>> {
    let (m, t) = residuals.shape();
    if m <= 5 * t {
        return Err(Error::Estimation(format!(
            "{m} residual rows cannot support a {t}x{t} covariance (need more than {})",
            5 * t
        )));
    }
    let centered = center_columns(residuals);
    let inv_m = S::one() / S::from_usize_lossy(m);
    let keep = S::lit(1.0 - SHRINKAGE);
    let mut cov = centered.gram().scale(inv_m);
    for i in 0..t {
        for j in 0..t {
            if i != j {
                let v = cov.get(i, j) * keep;
                cov.set(i, j, v);
            }
        }
    }
    Ok(cov)
}

/// Bias summary under a caller-supplied covariance.
pub fn bias_summary_with_sigma<S: Scalar>(residuals: &Matrix<S>, sigma: &Matrix<S>) -> Result<BiasSummary> {
    let (m, t) = residuals.shape();
    if m == 0 {
        return Err(Error::Estimation("no residual rows".into()));
    }
    if sigma.shape() != (t, t) {
        return Err(Error::dim(format!(
            "covariance is {:?} for residuals of length {t}",
            sigma.shape()
        )));
    }
    let chol = Cholesky::factor(sigma)?;
    let (mut bias, mut mahal, mut sq) = (0.0, 0.0, 0.0);
    let mut log_det = 0.0;
    for r in 0..m {
        let terms = autocorrelation_bias_terms(residuals.row(r), &chol)?;
        bias += terms.bias.as_f64();
        mahal += terms.mahalanobis.as_f64();
        sq += terms.squared_norm.as_f64();
        log_det = terms.log_det.as_f64();
    }
    let n = m as f64;
    Ok(BiasSummary {
        windows: m,
        horizon: t,
        shrinkage: 0.0,
        mean_bias: bias / n,
        mean_mahalanobis: mahal / n,
        mean_squared_norm: sq / n,
        quadratic_gap: (mahal - sq) / n,
        log_det_term: -0.5 * log_det,
    })
}

/// Bias summary under the shrunk sample covariance of the residuals themselves.
pub fn bias_summary_from_residuals<S: Scalar>(residuals: &Matrix<S>) -> Result<BiasSummary> {
    let sigma = residual_covariance(residuals)?;
    let summary = bias_summary_with_sigma(residuals, &sigma)?;
    Ok(BiasSummary {
        shrinkage: SHRINKAGE,
        ..summary
    })
}

/// Bias summary of a model's standardized forecast residuals on `split`.
pub fn bias_summary<S: Scalar>(ds: &WindowedDataset<S>, split: Split, model: &LinearForecaster<S>) -> Result<BiasSummary> {
    let batch = ds.full_batch(split)?;
    let residuals = batch.labels.sub(&model.predict(&batch)?)?;
    bias_summary_from_residuals(&residuals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::autocorrelation_bias;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn hand_case_matches_the_objective() {
        let sigma = Matrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let v = Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let s = bias_summary_with_sigma(&v, &sigma).unwrap();
        assert_eq!(s.mean_bias, autocorrelation_bias(&[1.0, 1.0], &sigma).unwrap());
        let expect = 4.0 / 3.0 - 2.0 - 0.5 * 0.75f64.ln();
        assert!((s.mean_bias - expect).abs() < 1e-12);
    }

    #[test]
    fn whitened_residuals_have_no_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (m, t) = (4000, 12);
        let raw = Matrix::from_fn(m, t, |_, j| {
            let g: f64 = StandardNormal.sample(&mut rng);
            g * (1.0 + j as f64 * 0.1)
        })
        .unwrap();
        // centre, then whiten with the Cholesky factor of the population covariance
        let c = center_columns(&raw);
        let cov = c.gram().scale(1.0 / m as f64);
        let l = Cholesky::factor(&cov).unwrap();
        let low = l.lower();
        let mut white = c.clone();
        for r in 0..m {
            let row = white.row_mut(r);
            for i in 0..t {
                let s: f64 = row[i] - (0..i).map(|k| low.get(i, k) * row[k]).sum::<f64>();
                row[i] = s / low.get(i, i);
            }
        }
        let s = bias_summary_from_residuals(&white).unwrap();
        assert!(s.mean_bias.abs() < 0.05, "{s:?}");
    }

    #[test]
    fn forecast_errors_of_an_ar1_have_a_positive_gap() {
        // h-step errors of the optimal AR(1) predictor in unit-variance
        // units: e_j = sum_{i<=j} phi^(j-i) eps_i with Var(eps) = 1 - phi^2
        let (phi, m, t) = (0.9f64, 20_000, 16);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sd = (1.0 - phi * phi).sqrt();
        let mut data = Vec::with_capacity(m * t);
        for _ in 0..m {
            let mut e = 0.0;
            for _ in 0..t {
                let g: f64 = StandardNormal.sample(&mut rng);
                e = phi * e + sd * g;
                data.push(e);
            }
        }
        let resid = Matrix::from_vec(m, t, data).unwrap();
        let s = bias_summary_from_residuals(&resid).unwrap();

        let analytic = Matrix::from_fn(t, t, |j, k| {
            let (j, k) = (j + 1, k + 1);
            (1..=j.min(k)).map(|i| phi.powi((j + k - 2 * i) as i32)).sum::<f64>() * (1.0 - phi * phi)
        })
        .unwrap();
        let shrunk = Matrix::from_fn(t, t, |j, k| {
            analytic.get(j, k) * if j == k { 1.0 } else { 1.0 - SHRINKAGE }
        })
        .unwrap();
        let solved = crate::linalg::cholesky_solve(&shrunk, &analytic).unwrap();
        let expect_gap = solved.trace() - analytic.trace();
        let expect_log_det = -0.5 * crate::linalg::log_det_spd(&shrunk).unwrap();
        assert!((s.quadratic_gap - expect_gap).abs() < 0.1, "{} vs {expect_gap}", s.quadratic_gap);
        assert!((s.log_det_term - expect_log_det).abs() < 0.2, "{} vs {expect_log_det}", s.log_det_term);
        assert!(s.mean_bias > 0.0);

        // under the exact covariance the Mahalanobis term averages T while
        // the squared norm averages tr(Sigma) < T
        let exact = bias_summary_with_sigma(&resid, &analytic).unwrap();
        let expect = t as f64 - analytic.trace();
        assert!(exact.quadratic_gap > 0.0);
        assert!((exact.quadratic_gap - expect).abs() < 0.15, "{} vs {expect}", exact.quadratic_gap);
    }

    #[test]
    fn too_few_rows() {
        let r = Matrix::<f64>::zeros(50, 10);
        assert!(matches!(bias_summary_from_residuals(&r), Err(Error::Estimation(_))));
    }
}
