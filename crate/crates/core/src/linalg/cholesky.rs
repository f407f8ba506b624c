use super::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Diagonal jitter for the single retry, relative to `trace / n`.
pub const SPD_JITTER: f64 = 1e-10;

/// Lower-triangular Cholesky factor `L` with `spd = L L^T` (up to jitter).
#[derive(Debug, Clone)]
pub struct Cholesky<S: Scalar> {
    lower: Matrix<S>,
}

impl<S: Scalar> Cholesky<S> {
    /// Factors `spd`; if a pivot is non-positive the diagonal is jittered by
    /// `SPD_JITTER * trace / n` and factorization is tried exactly once more.
    pub fn factor(spd: &Matrix<S>) -> Result<Self> {
        if !spd.is_square() || spd.is_empty() {
            return Err(Error::dim(format!(
                "Cholesky needs a non-empty square matrix, got {}x{}",
                spd.rows(),
                spd.cols()
            )));
        }
        match factor_with(spd, S::zero()) {
            Ok(lower) => Ok(Self { lower }),
            Err(_) => {
                let n = S::from_usize_lossy(spd.rows());
                let jitter = S::lit(SPD_JITTER) * spd.trace().abs() / n;
                factor_with(spd, jitter).map(|lower| Self { lower })
            }
        }
    }

    pub fn lower(&self) -> &Matrix<S> {
        &self.lower
    }

    /// Solves `A x = rhs` column by column.
    pub fn solve(&self, rhs: &Matrix<S>) -> Result<Matrix<S>> {
        let n = self.lower.rows();
        if rhs.rows() != n {
            return Err(Error::dim(format!(
                "right-hand side has {} rows, system has {n}",
                rhs.rows()
            )));
        }
        let l = &self.lower;
        let mut x = rhs.clone();
        for c in 0..rhs.cols() {
            for i in 0..n {
                let mut s = x.get(i, c);
                for k in 0..i {
                    s -= l.get(i, k) * x.get(k, c);
                }
                x.set(i, c, s / l.get(i, i));
            }
            for i in (0..n).rev() {
                let mut s = x.get(i, c);
                for k in (i + 1)..n {
                    s -= l.get(k, i) * x.get(k, c);
                }
                x.set(i, c, s / l.get(i, i));
            }
        }
        Ok(x)
    }

    pub fn solve_vec(&self, rhs: &[S]) -> Result<Vec<S>> {
        let b = Matrix::from_vec(rhs.len(), 1, rhs.to_vec())?;
        Ok(self.solve(&b)?.into_vec())
    }

    pub fn log_det(&self) -> S {
        let n = self.lower.rows();
        (0..n).map(|i| self.lower.get(i, i).ln()).sum::<S>() * S::lit(2.0)
    }
}

fn factor_with<S: Scalar>(spd: &Matrix<S>, jitter: S) -> Result<Matrix<S>> {
    let n = spd.rows();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = spd.get(i, j);
            if i == j {
                sum += jitter;
            }
            for k in 0..j {
                sum -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if !(sum > S::zero()) {
                    return Err(Error::Factorization(format!(
                        "matrix is not positive definite (pivot {i} = {sum})"
                    )));
                }
                l.set(i, i, sum.sqrt());
            } else {
                l.set(i, j, sum / l.get(j, j));
            }
        }
    }
    Ok(l)
}

pub fn cholesky_solve<S: Scalar>(spd: &Matrix<S>, rhs: &Matrix<S>) -> Result<Matrix<S>> {
    Cholesky::factor(spd)?.solve(rhs)
}

/// `log det` of a symmetric positive definite matrix.
pub fn log_det_spd<S: Scalar>(spd: &Matrix<S>) -> Result<S> {
    Ok(Cholesky::factor(spd)?.log_det())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_solve() {
        let b = Matrix::<f64>::from_rows(&[[1.0], [-2.0], [3.5]]).unwrap();
        let x = cholesky_solve(&Matrix::identity(3), &b).unwrap();
        assert!(x.max_abs_diff(&b).unwrap() < 1e-9);
    }

    #[test]
    fn diagonal_solve() {
        let a = Matrix::<f64>::diag(&[2.0, 2.0]).unwrap();
        let b = Matrix::<f64>::from_rows(&[[4.0], [6.0]]).unwrap();
        let x = cholesky_solve(&a, &b).unwrap();
        assert!((x.get(0, 0) - 2.0).abs() < 1e-9);
        assert!((x.get(1, 0) - 3.0).abs() < 1e-9);
    }

    #[test]
    fn log_dets() {
        assert!(log_det_spd(&Matrix::<f64>::identity(4)).unwrap().abs() < 1e-9);
        let d = log_det_spd(&Matrix::<f64>::diag(&[2.0, 3.0]).unwrap()).unwrap();
        assert!((d - 6f64.ln()).abs() < 1e-9);
        // det [[1, .5], [.5, 1]] = 1 - 0.25
        let a = Matrix::<f64>::from_rows(&[[1.0, 0.5], [0.5, 1.0]]).unwrap();
        assert!((log_det_spd(&a).unwrap() - 0.75f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn jitter_rescues_semidefinite() {
        // rank one, singular without the diagonal jitter
        let a = Matrix::<f64>::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        let c = Cholesky::factor(&a).unwrap();
        assert!(c.log_det() < -20.0);
    }

    #[test]
    fn rejects_indefinite() {
        let a = Matrix::<f64>::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(matches!(Cholesky::factor(&a), Err(Error::Factorization(_))));
        let z = Matrix::<f64>::zeros(2, 2);
        assert!(log_det_spd(&z).is_err());
        assert!(Cholesky::factor(&Matrix::<f64>::zeros(2, 3)).is_err());
    }
}
