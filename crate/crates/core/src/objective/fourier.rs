//! Frequency-domain L1 loss on the real-input DFT, computed by direct summation.

use std::f64::consts::PI;

use crate::error::Result;
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Cosine and sine tables for the `T/2 + 1` non-negative frequencies of a
/// length-`T` real signal.
#[derive(Debug, Clone)]
pub struct DftTable<S> {
    len: usize,
    freqs: usize,
    cos: Vec<S>,
    sin: Vec<S>,
}

impl<S: Scalar> DftTable<S> {
    pub fn new(len: usize) -> Self {
        let freqs = len / 2 + 1;
        let mut cos = Vec::with_capacity(len * freqs);
        let mut sin = Vec::with_capacity(len * freqs);
        for t in 0..len {
            for k in 0..freqs {
                // reduce k*t mod len before scaling to keep the angle small
                let angle = 2.0 * PI * ((k * t) % len) as f64 / len as f64;
                cos.push(S::lit(angle.cos()));
                let real_only = k == 0 || 2 * k == len;
                sin.push(if real_only { S::zero() } else { S::lit(angle.sin()) });
            }
        }
        Self { len, freqs, cos, sin }
    }

    pub fn freqs(&self) -> usize {
        self.freqs
    }

    /// Real and imaginary parts of the DFT of `x`.
    pub fn transform(&self, x: &[S]) -> (Vec<S>, Vec<S>) {
        debug_assert_eq!(x.len(), self.len);
        let mut re = vec![S::zero(); self.freqs];
        let mut im = vec![S::zero(); self.freqs];
        for (t, &v) in x.iter().enumerate() {
            let c = &self.cos[t * self.freqs..(t + 1) * self.freqs];
            let s = &self.sin[t * self.freqs..(t + 1) * self.freqs];
            for k in 0..self.freqs {
                re[k] += v * c[k];
                im[k] -= v * s[k];
            }
        }
        (re, im)
    }
}

/// Mean over rows and frequencies of `|dRe| + |dIm|` between the spectra of
/// `yhat` and `y`.
pub fn fourier_loss<S: Scalar>(yhat: &Matrix<S>, y: &Matrix<S>) -> Result<S> {
    yhat.ensure_same_shape(y)?;
    let table = DftTable::new(y.cols());
    let mut sum = S::zero();
    for i in 0..y.rows() {
        let (re_hat, im_hat) = table.transform(yhat.row(i));
        let (re, im) = table.transform(y.row(i));
        for k in 0..table.freqs {
            sum += (re_hat[k] - re[k]).abs() + (im_hat[k] - im[k]).abs();
        }
    }
    Ok(sum / S::from_usize_lossy((y.rows() * table.freqs).max(1)))
}

/// Subgradient of [`fourier_loss`] with respect to `yhat`.
pub fn fourier_grad<S: Scalar>(yhat: &Matrix<S>, y: &Matrix<S>) -> Result<Matrix<S>> {
    yhat.ensure_same_shape(y)?;
    let table = DftTable::new(y.cols());
    let scale = S::one() / S::from_usize_lossy((y.rows() * table.freqs).max(1));
    let mut grad = Matrix::zeros(y.rows(), y.cols());
    for i in 0..y.rows() {
        let (re_hat, im_hat) = table.transform(yhat.row(i));
        let (re, im) = table.transform(y.row(i));
        let sr: Vec<S> = (0..table.freqs).map(|k| signum0(re_hat[k] - re[k])).collect();
        let si: Vec<S> = (0..table.freqs).map(|k| signum0(im_hat[k] - im[k])).collect();
        let row = grad.row_mut(i);
        for (t, g) in row.iter_mut().enumerate() {
            let c = &table.cos[t * table.freqs..(t + 1) * table.freqs];
            let s = &table.sin[t * table.freqs..(t + 1) * table.freqs];
            let mut acc = S::zero();
            for k in 0..table.freqs {
                acc += sr[k] * c[k] - si[k] * s[k];
            }
            *g = acc * scale;
        }
    }
    Ok(grad)
}

fn signum0<S: Scalar>(x: S) -> S {
    if x > S::zero() {
        S::one()
    } else if x < S::zero() {
        -S::one()
    } else {
        S::zero()
    }
}
