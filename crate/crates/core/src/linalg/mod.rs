//! Dense linear algebra kernel.

mod cholesky;
mod eigen;
mod matrix;
mod stats;

pub use cholesky::{cholesky_solve, log_det_spd, Cholesky, SPD_JITTER};
pub use eigen::{canonical_sign, svd, symmetric_eigen, SvdResult, SymmetricEigen, RANK_TOL};
pub use matrix::{dot, Matrix};
pub use stats::{destandardize, fit_stats, standardize, ColumnStats, STD_FLOOR};
