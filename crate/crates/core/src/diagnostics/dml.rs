use serde::{Deserialize, Serialize};

use super::{center_columns, CorrelationKind, CorrelationMatrix, Estimator};
use crate::data::{Split, WindowedDataset};
use crate::error::{Error, Result};
use crate::linalg::{dot, Cholesky, Matrix};
use crate::projection::{transform, BasisSet};
use crate::scalar::Scalar;

/// Ridge added to the history Gram matrix, relative to its mean diagonal.
pub const DML_RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DmlTarget {
    Labels,
    Components,
}

/// Partial correlations between target columns given the history.
///
/// Every target column is residualized on the centered history by ridge
/// least squares; entry `(t, t')` is the slope of residual `t'` on residual
/// `t` standardized by both residual deviations, which is their correlation.
pub fn dml_correlation_from<S: Scalar>(history: &Matrix<S>, targets: &Matrix<S>) -> Result<Matrix<S>> {
    let (n, p) = history.shape();
    if targets.rows() != n {
        return Err(Error::dim(format!(
            "history has {n} rows, targets have {}",
            targets.rows()
        )));
    }
    if n < 10 * p.max(1) {
        return Err(Error::Estimation(format!(
            "{n} samples are too few to regress on {p} history features (need {})",
            10 * p.max(1)
        )));
    }
    let x = center_columns(history);
    let y = center_columns(targets);
    let mut g = x.gram();
    let mean_diag = g.trace() / S::from_usize_lossy(p.max(1));
    let ridge = S::lit(DML_RIDGE) * if mean_diag > S::zero() { mean_diag } else { S::one() };
    for i in 0..p {
        let v = g.get(i, i) + ridge;
        g.set(i, i, v);
    }
    let chol = Cholesky::factor(&g).map_err(|e| Error::Estimation(format!("history regression: {e}")))?;
    let coef = chol.solve(&x.t_matmul(&y)?)?;
    let resid = y.sub(&x.matmul(&coef)?)?;
    let target_sd: Vec<S> = (0..y.cols()).map(|j| dot(&y.col(j), &y.col(j)).sqrt()).collect();
    residual_correlation(&resid, &target_sd)
}

/// Residual deviations below this share of the target's own deviation mean
/// the history explains the target.
const EXPLAINED: f64 = 1e-4;

fn residual_correlation<S: Scalar>(resid: &Matrix<S>, target_sd: &[S]) -> Result<Matrix<S>> {
    let q = resid.cols();
    let cov = resid.gram();
    let sd: Vec<S> = (0..q).map(|i| cov.get(i, i).sqrt()).collect();
    if let Some(j) = (0..q).find(|&j| sd[j] <= target_sd[j] * S::lit(EXPLAINED) || sd[j] == S::zero()) {
        return Err(Error::Estimation(format!(
            "target {j} is constant or fully explained by the history; its partial correlation is undefined"
        )));
    }
    let mut c = Matrix::zeros(q, q);
    for i in 0..q {
        for j in 0..q {
            let v = if i == j {
                S::one()
            } else {
                let a = cov.get(i, j) / (sd[i] * sd[j]);
                let b = cov.get(j, i) / (sd[i] * sd[j]);
                (a + b) / S::lit(2.0)
            };
            c.set(i, j, v);
        }
    }
    Ok(c)
}

/// Plain correlation between target columns.
pub fn pearson_correlation<S: Scalar>(targets: &Matrix<S>) -> Result<Matrix<S>> {
    if targets.rows() < 2 {
        return Err(Error::Estimation("correlation needs at least 2 rows".into()));
    }
    let c = center_columns(targets);
    let sd: Vec<S> = (0..c.cols()).map(|j| dot(&c.col(j), &c.col(j)).sqrt()).collect();
    residual_correlation(&c, &sd)
}

/// DML partial-correlation matrix of the label steps (or of their basis
/// components) of `split`, with each row's own lookback as the history.
pub fn dml_partial_correlation<S: Scalar>(
    ds: &WindowedDataset<S>,
    split: Split,
    target: DmlTarget,
    bases: Option<&BasisSet<S>>,
) -> Result<CorrelationMatrix<S>> {
    let batch = ds.full_batch(split)?;
    let targets = match target {
        DmlTarget::Labels => batch.labels,
        DmlTarget::Components => {
            let bases = bases.ok_or_else(|| Error::config("component correlations need a projection basis"))?;
            components_of(&batch.labels, &batch.variates, bases)?
        }
    };
    Ok(CorrelationMatrix {
        values: dml_correlation_from(&batch.inputs, &targets)?,
        kind: match target {
            DmlTarget::Labels => CorrelationKind::LabelSteps,
            DmlTarget::Components => CorrelationKind::Components,
        },
        estimator: Estimator::Dml,
    })
}

/// All `T` components of every row, each row projected with its variate's basis.
pub(crate) fn components_of<S: Scalar>(labels: &Matrix<S>, variates: &[usize], bases: &BasisSet<S>) -> Result<Matrix<S>> {
    let t = bases.horizon();
    let d = variates.iter().max().map_or(0, |&v| v + 1);
    let mut out = Matrix::zeros(labels.rows(), t);
    let groups: Vec<Vec<usize>> = match bases.mode() {
        crate::projection::ProjectionMode::Pooled => vec![(0..labels.rows()).collect()],
        crate::projection::ProjectionMode::PerVariate => {
            let mut g = vec![Vec::new(); d];
            for (r, &v) in variates.iter().enumerate() {
                g[v].push(r);
            }
            g
        }
    };
    for (gi, rows) in groups.iter().enumerate() {
        if rows.is_empty() {
            continue;
        }
        let basis = bases.for_variate(gi);
        let z = transform(basis, &basis.prepare(&labels.select_rows(rows))?, t)?.z;
        for (i, &r) in rows.iter().enumerate() {
            out.row_mut(r).copy_from_slice(z.row(i));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix<f64> {
        Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng)).unwrap()
    }

    #[test]
    fn independent_targets_show_no_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let hist = gaussian(&mut rng, 10_000, 8);
        let y = gaussian(&mut rng, 10_000, 6);
        let c = dml_correlation_from(&hist, &y).unwrap();
        let cm = CorrelationMatrix {
            values: c,
            kind: CorrelationKind::LabelSteps,
            estimator: Estimator::Dml,
        };
        assert!(cm.max_abs_off_diagonal() < 0.05, "{}", cm.max_abs_off_diagonal());
    }

    #[test]
    fn planted_effect_is_recovered() {
        // y0 = history effect + e0, y1 = 0.6 y0 + other history effect + e1,
        // so the residual correlation is 0.6 / sqrt(0.36 + 1)
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 10_000;
        let hist = gaussian(&mut rng, n, 5);
        let noise = gaussian(&mut rng, n, 2);
        let y = Matrix::from_fn(n, 2, |i, j| {
            let h = hist.row(i);
            let y0 = 0.8 * h[0] - 0.5 * h[3] + noise.get(i, 0);
            if j == 0 {
                y0
            } else {
                0.6 * y0 + 1.2 * h[1] + 0.3 * h[4] + noise.get(i, 1)
            }
        })
        .unwrap();
        let c = dml_correlation_from(&hist, &y).unwrap();
        let expect = 0.6 / 1.36f64.sqrt();
        assert!((c.get(0, 1) - expect).abs() < 0.05, "{} vs {expect}", c.get(0, 1));
        assert_eq!(c.get(0, 1), c.get(1, 0));
    }

    #[test]
    fn too_few_samples_or_explained_targets() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let hist = gaussian(&mut rng, 50, 8);
        let y = gaussian(&mut rng, 50, 2);
        assert!(matches!(dml_correlation_from(&hist, &y), Err(Error::Estimation(_))));
        let hist = gaussian(&mut rng, 200, 2);
        let y = Matrix::from_fn(200, 2, |i, j| hist.get(i, j) * 2.0 + 1.0).unwrap();
        assert!(matches!(dml_correlation_from(&hist, &y), Err(Error::Estimation(_))));
    }
}
