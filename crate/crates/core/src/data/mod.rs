//! Series ingestion, synthetic autocorrelated series, chronological splits and
//! sliding windows.

mod csv_io;
mod split;
mod synth;
mod window;

pub use csv_io::{load_csv, save_csv, write_csv};
pub use split::{split_chronological, Split, SplitBoundaries, SplitSpec};
pub use synth::{synth_ar, SynthSpec};
pub use window::{make_windows, Batch, WindowedDataset};

use chrono::NaiveDateTime;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// A multivariate series: `N` rows (time) by `D` variates.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesFrame<S: Scalar> {
    timestamps: Option<Vec<NaiveDateTime>>,
    values: Matrix<S>,
    names: Vec<String>,
}

impl<S: Scalar> SeriesFrame<S> {
    pub fn new(timestamps: Option<Vec<NaiveDateTime>>, values: Matrix<S>, names: Vec<String>) -> Result<Self> {
        if names.len() != values.cols() {
            return Err(Error::dim(format!(
                "{} variate names for {} columns",
                names.len(),
                values.cols()
            )));
        }
        if let Some(ts) = &timestamps {
            if ts.len() != values.rows() {
                return Err(Error::dim(format!(
                    "{} timestamps for {} rows",
                    ts.len(),
                    values.rows()
                )));
            }
            if let Some(i) = ts.windows(2).position(|w| w[1] <= w[0]) {
                return Err(Error::Format(format!(
                    "timestamps not strictly increasing at row {}",
                    i + 1
                )));
            }
        }
        Ok(Self {
            timestamps,
            values,
            names,
        })
    }

    pub fn timestamps(&self) -> Option<&[NaiveDateTime]> {
        self.timestamps.as_deref()
    }

    pub fn values(&self) -> &Matrix<S> {
        &self.values
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.values.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.rows() == 0
    }

    pub fn variates(&self) -> usize {
        self.values.cols()
    }

    /// Same frame with `values` replaced; shape must match.
    pub fn with_values(&self, values: Matrix<S>) -> Result<Self> {
        if values.shape() != self.values.shape() {
            return Err(Error::dim("replacement values change the frame shape"));
        }
        Ok(Self {
            timestamps: self.timestamps.clone(),
            values,
            names: self.names.clone(),
        })
    }
}

/// Lag-`lag` sample autocorrelation of one series.
pub fn autocorrelation<S: Scalar>(x: &[S], lag: usize) -> S {
    let n = x.len();
    if lag >= n {
        return S::zero();
    }
    let mean = x.iter().copied().sum::<S>() / S::from_usize_lossy(n);
    let denom: S = x.iter().map(|&v| (v - mean) * (v - mean)).sum();
    if denom == S::zero() {
        return S::zero();
    }
    let num: S = (lag..n).map(|t| (x[t] - mean) * (x[t - lag] - mean)).sum();
    num / denom
}
