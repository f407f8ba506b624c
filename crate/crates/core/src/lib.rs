//! Decorrelated forecast objectives: an orthogonal label-space basis fitted
//! by SVD, the component loss built on it, a linear forecaster to train with
//! it, and diagnostics for label autocorrelation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod diagnostics;
pub mod error;
pub mod forecast;
pub mod linalg;
pub mod objective;
pub mod projection;
pub mod scalar;
mod serde_scalar;

pub use error::{Error, Result};
pub use linalg::{ColumnStats, Matrix, SvdResult};
pub use scalar::Scalar;

pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type Basis64 = projection::ProjectionBasis<f64>;
pub type BasisSet64 = projection::BasisSet<f64>;
pub type Frame64 = data::SeriesFrame<f64>;
pub type Dataset64 = data::WindowedDataset<f64>;
pub type Forecaster64 = forecast::LinearForecaster<f64>;
pub type Forecaster32 = forecast::LinearForecaster<f32>;
