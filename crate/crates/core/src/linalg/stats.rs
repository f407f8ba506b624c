use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Floor applied to fitted standard deviations so constant columns stay invertible.
pub const STD_FLOOR: f64 = 1e-8;

/// Per-column mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ColumnStats<S: Scalar> {
    #[serde(with = "crate::serde_scalar::vec")]
    pub means: Vec<S>,
    #[serde(with = "crate::serde_scalar::vec")]
    pub stds: Vec<S>,
}

impl<S: Scalar> ColumnStats<S> {
    /// Stats that leave values unchanged.
    pub fn identity(cols: usize) -> Self {
        Self {
            means: vec![S::zero(); cols],
            stds: vec![S::one(); cols],
        }
    }

    pub fn new(means: Vec<S>, stds: Vec<S>) -> Result<Self> {
        if means.len() != stds.len() {
            return Err(Error::dim("means and stds differ in length"));
        }
        let floor = S::lit(STD_FLOOR);
        if stds.iter().any(|&s| !(s >= floor) || !s.is_finite()) || means.iter().any(|m| !m.is_finite()) {
            return Err(Error::Numeric(
                "stats must be finite with stds at or above the floor".into(),
            ));
        }
        Ok(Self { means, stds })
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn fit(m: &Matrix<S>) -> Result<Self> {
        fit_stats(m)
    }

    /// Stats restricted to one column, as a single-column `ColumnStats`.
    pub fn column(&self, j: usize) -> Self {
        Self {
            means: vec![self.means[j]],
            stds: vec![self.stds[j]],
        }
    }
}

pub fn fit_stats<S: Scalar>(m: &Matrix<S>) -> Result<ColumnStats<S>> {
    if m.rows() < 2 {
        return Err(Error::dim(format!(
            "column statistics need at least 2 rows, got {}",
            m.rows()
        )));
    }
    let n = S::from_usize_lossy(m.rows());
    let mut means = vec![S::zero(); m.cols()];
    for i in 0..m.rows() {
        for (acc, &x) in means.iter_mut().zip(m.row(i)) {
            *acc += x;
        }
    }
    for mu in &mut means {
        *mu /= n;
    }
    let mut vars = vec![S::zero(); m.cols()];
    for i in 0..m.rows() {
        for ((acc, &x), &mu) in vars.iter_mut().zip(m.row(i)).zip(&means) {
            let d = x - mu;
            *acc += d * d;
        }
    }
    let floor = S::lit(STD_FLOOR);
    let stds = vars.into_iter().map(|v| (v / n).sqrt().max(floor)).collect();
    Ok(ColumnStats { means, stds })
}

pub fn standardize<S: Scalar>(m: &Matrix<S>, stats: &ColumnStats<S>) -> Result<Matrix<S>> {
    check_width(m, stats)?;
    let mut out = m.clone();
    for i in 0..out.rows() {
        for ((x, &mu), &sd) in out.row_mut(i).iter_mut().zip(&stats.means).zip(&stats.stds) {
            *x = (*x - mu) / sd;
        }
    }
    Matrix::from_vec(out.rows(), out.cols(), out.into_vec())
}

/// Inverse of [`standardize`].
pub fn destandardize<S: Scalar>(m: &Matrix<S>, stats: &ColumnStats<S>) -> Result<Matrix<S>> {
    check_width(m, stats)?;
    let mut out = m.clone();
    for i in 0..out.rows() {
        for ((x, &mu), &sd) in out.row_mut(i).iter_mut().zip(&stats.means).zip(&stats.stds) {
            *x = *x * sd + mu;
        }
    }
    Matrix::from_vec(out.rows(), out.cols(), out.into_vec())
}

fn check_width<S: Scalar>(m: &Matrix<S>, stats: &ColumnStats<S>) -> Result<()> {
    if m.cols() != stats.len() {
        return Err(Error::dim(format!(
            "matrix has {} columns but stats cover {}",
            m.cols(),
            stats.len()
        )));
    }
    Ok(())
}
