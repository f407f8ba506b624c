//! Analysis artifacts: partial-correlation matrices, component variance
//! profiles, autocorrelation-bias summaries and projection-cost scaling.

mod bench;
mod bias;
mod dml;
mod variance;

pub use bench::{log_log_slope, scaling_bench, BenchRow, ScalingBench};
pub use bias::{bias_summary, bias_summary_from_residuals, bias_summary_with_sigma, residual_covariance, BiasSummary, SHRINKAGE};
pub use dml::{dml_correlation_from, dml_partial_correlation, pearson_correlation, DmlTarget, DML_RIDGE};
pub use variance::{variance_profile, CapturedVariance, VarianceProfile};

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelationKind {
    LabelSteps,
    Components,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Dml,
    Pearson,
}

/// Symmetric matrix of pairwise correlations between label steps or components.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix<S: Scalar> {
    pub values: Matrix<S>,
    pub kind: CorrelationKind,
    pub estimator: Estimator,
}

impl<S: Scalar> CorrelationMatrix<S> {
    pub fn size(&self) -> usize {
        self.values.rows()
    }

    fn off_diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.size();
        (0..n).flat_map(move |i| (0..n).filter(move |&j| j != i).map(move |j| self.values.get(i, j).as_f64()))
    }

    pub fn mean_abs_off_diagonal(&self) -> f64 {
        let n = self.size();
        if n < 2 {
            return 0.0;
        }
        self.off_diagonal().map(f64::abs).sum::<f64>() / (n * (n - 1)) as f64
    }

    pub fn max_abs_off_diagonal(&self) -> f64 {
        self.off_diagonal().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Share of off-diagonal entries with `|value| > threshold`.
    pub fn fraction_above(&self, threshold: f64) -> f64 {
        let n = self.size();
        if n < 2 {
            return 0.0;
        }
        self.off_diagonal().filter(|v| v.abs() > threshold).count() as f64 / (n * (n - 1)) as f64
    }

    /// CSV with an index header row and column; values clipped to `[-1, 1]`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let label = match self.kind {
            CorrelationKind::LabelSteps => "step",
            CorrelationKind::Components => "component",
        };
        let clipped = self.values.map(|v| v.max(-S::one()).min(S::one()))?;
        write_matrix_csv(&clipped, label, writer)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

pub(crate) fn write_matrix_csv<S: Scalar, W: Write>(m: &Matrix<S>, label: &str, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let to_err = |e: csv::Error| Error::Format(e.to_string());
    let mut header = vec![label.to_string()];
    header.extend((0..m.cols()).map(|j| j.to_string()));
    w.write_record(&header).map_err(to_err)?;
    for i in 0..m.rows() {
        let mut rec = vec![i.to_string()];
        rec.extend(m.row(i).iter().map(|v| v.as_f64().to_string()));
        w.write_record(&rec).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))
}

/// Subtracts each column's mean.
pub(crate) fn center_columns<S: Scalar>(m: &Matrix<S>) -> Matrix<S> {
    let n = S::from_usize_lossy(m.rows().max(1));
    let mut means = vec![S::zero(); m.cols()];
    for i in 0..m.rows() {
        for (mu, &v) in means.iter_mut().zip(m.row(i)) {
            *mu += v;
        }
    }
    means.iter_mut().for_each(|mu| *mu /= n);
    let mut out = m.clone();
    for i in 0..out.rows() {
        for (v, &mu) in out.row_mut(i).iter_mut().zip(&means) {
            *v -= mu;
        }
    }
    out
}
