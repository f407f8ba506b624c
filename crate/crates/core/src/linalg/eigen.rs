//! Symmetric eigendecomposition by cyclic Jacobi rotations, and the thin SVD
//! built on top of it through the Gram matrix.

use super::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 64;

/// Singular values below `RANK_TOL * sigma_max` are treated as zero when
/// recovering left singular vectors.
pub const RANK_TOL: f64 = 1e-12;

/// Eigenpairs of a symmetric matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<S: Scalar> {
    pub values: Vec<S>,
    /// Eigenvectors stored as columns, in the order of `values`.
    pub vectors: Matrix<S>,
    pub sweeps: usize,
}

/// Thin SVD `m = U diag(sigma) V^T`.
#[derive(Debug, Clone)]
pub struct SvdResult<S: Scalar> {
    /// Descending, non-negative.
    pub singular_values: Vec<S>,
    /// `cols x cols`, orthonormal columns.
    pub right_vectors: Matrix<S>,
    /// `rows x cols`; columns for numerically zero singular values are zero.
    pub left_vectors: Option<Matrix<S>>,
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Only the upper triangle's symmetry is assumed, not checked beyond a loose
/// tolerance.
pub fn symmetric_eigen<S: Scalar>(a: &Matrix<S>) -> Result<SymmetricEigen<S>> {
    if !a.is_square() || a.is_empty() {
        return Err(Error::dim(format!(
            "eigendecomposition needs a non-empty square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let scale = a.as_slice().iter().fold(S::zero(), |m, x| m.max(x.abs()));
    for i in 0..n {
        for j in 0..i {
            if (a.get(i, j) - a.get(j, i)).abs() > S::lit(1e-8) * (S::one() + scale) {
                return Err(Error::Numeric(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }

    let mut w = a.clone();
    // Rows of `vt` are the eigenvectors; row updates stay contiguous.
    let mut vt = Matrix::<S>::identity(n);
    let eps = S::epsilon();
    let mut sweeps = 0;
    // Round-robin ordering: every sweep visits each pair once, in n - 1
    // rounds of disjoint pairs. Rotations within a round commute, so a round
    // is applied as one pass over rows and one pass over columns.
    let players = n + n % 2;
    let mut rots: Vec<Rotation<S>> = Vec::with_capacity(players / 2);

    loop {
        let mut rotated = false;
        for round in 0..players.saturating_sub(1) {
            rots.clear();
            for (p, q) in round_pairs(players, round) {
                if q >= n {
                    continue;
                }
                let apq = w.get(p, q);
                if apq == S::zero() {
                    continue;
                }
                let app = w.get(p, p);
                let aqq = w.get(q, q);
                if apq.abs() <= eps * (app * aqq).abs().sqrt() {
                    w.set(p, q, S::zero());
                    w.set(q, p, S::zero());
                    continue;
                }
                let theta = (aqq - app) / (apq + apq);
                let t = if theta.abs() > S::lit(1e15) {
                    S::one() / (theta + theta)
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + S::one()).sqrt())
                };
                let c = S::one() / (t * t + S::one()).sqrt();
                rots.push(Rotation {
                    p,
                    q,
                    c,
                    s: t * c,
                    app: app - t * apq,
                    aqq: aqq + t * apq,
                });
            }
            if rots.is_empty() {
                continue;
            }
            rotated = true;
            apply_round(&mut w, &mut vt, &rots);
        }
        sweeps += 1;
        if !rotated {
            break;
        }
        if sweeps >= MAX_SWEEPS {
            return Err(Error::Numeric(format!(
                "Jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps"
            )));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps Jacobi output order within exact ties.
    order.sort_by(|&i, &j| {
        w.get(j, j)
            .partial_cmp(&w.get(i, i))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| w.get(i, i)).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| vt.get(order[c], r))?;
    Ok(SymmetricEigen {
        values,
        vectors,
        sweeps,
    })
}

struct Rotation<S> {
    p: usize,
    q: usize,
    c: S,
    s: S,
    /// Diagonal entries after the rotation.
    app: S,
    aqq: S,
}

/// Pairs of round `round` in a round-robin tournament of `players` (even):
/// player 0 stays put while the others rotate.
fn round_pairs(players: usize, round: usize) -> impl Iterator<Item = (usize, usize)> {
    let k = players - 1;
    let slot = move |i: usize| if i == 0 { 0 } else { 1 + (i - 1 + round) % k };
    (0..players / 2).map(move |i| {
        let (a, b) = (slot(i), slot(players - 1 - i));
        (a.min(b), a.max(b))
    })
}

fn rotate_pair<S: Scalar>(data: &mut [S], n: usize, p: usize, q: usize, c: S, s: S) {
    let (lo, hi) = data.split_at_mut(q * n);
    let rp = &mut lo[p * n..(p + 1) * n];
    let rq = &mut hi[..n];
    for (a, b) in rp.iter_mut().zip(rq.iter_mut()) {
        let x = *a;
        let y = *b;
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

fn apply_round<S: Scalar>(w: &mut Matrix<S>, vt: &mut Matrix<S>, rots: &[Rotation<S>]) {
    let n = w.rows();
    let data = w.data_mut();
    for r in rots {
        rotate_pair(data, n, r.p, r.q, r.c, r.s);
    }
    for row in data.chunks_exact_mut(n) {
        for r in rots {
            let x = row[r.p];
            let y = row[r.q];
            row[r.p] = r.c * x - r.s * y;
            row[r.q] = r.s * x + r.c * y;
        }
    }
    for r in rots {
        data[r.p * n + r.p] = r.app;
        data[r.q * n + r.q] = r.aqq;
        data[r.p * n + r.q] = S::zero();
        data[r.q * n + r.p] = S::zero();
    }
    let v = vt.data_mut();
    for r in rots {
        rotate_pair(v, n, r.p, r.q, r.c, r.s);
    }
}

/// Flips `v` so its largest-magnitude entry is positive (first index wins ties).
pub fn canonical_sign<S: Scalar>(v: &mut [S]) -> bool {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < S::zero()) {
        for x in v.iter_mut() {
            *x = -*x;
        }
        true
    } else {
        false
    }
}

/// Thin SVD through the eigendecomposition of `m^T m`.
pub fn svd<S: Scalar>(m: &Matrix<S>, want_left: bool) -> Result<SvdResult<S>> {
    if m.is_empty() {
        return Err(Error::dim("svd of an empty matrix"));
    }
    if m.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("svd input contains non-finite values".into()));
    }
    let eig = symmetric_eigen(&m.gram())?;
    let n = m.cols();
    let singular_values: Vec<S> = eig.values.iter().map(|&l| l.max(S::zero()).sqrt()).collect();

    let mut columns: Vec<Vec<S>> = (0..n).map(|j| eig.vectors.col(j)).collect();
    for c in &mut columns {
        canonical_sign(c);
    }
    let right_vectors = Matrix::from_columns(&columns)?;

    let left_vectors = if want_left {
        let sigma_max = singular_values.first().copied().unwrap_or_else(S::zero);
        let cutoff = S::lit(RANK_TOL) * sigma_max;
        let mv = m.matmul(&right_vectors)?;
        let mut u = Matrix::zeros(m.rows(), n);
        for (j, &sigma) in singular_values.iter().enumerate() {
            if sigma > cutoff && sigma > S::zero() {
                for i in 0..m.rows() {
                    u.set(i, j, mv.get(i, j) / sigma);
                }
            }
        }
        Some(u)
    } else {
        None
    };

    Ok(SvdResult {
        singular_values,
        right_vectors,
        left_vectors,
    })
}

impl<S: Scalar> SvdResult<S> {
    /// `U diag(sigma) V^T`; requires left vectors.
    pub fn reconstruct(&self) -> Option<Matrix<S>> {
        let u = self.left_vectors.as_ref()?;
        let mut us = u.clone();
        for i in 0..us.rows() {
            for (x, &s) in us.row_mut(i).iter_mut().zip(&self.singular_values) {
                *x *= s;
            }
        }
        us.matmul_t(&self.right_vectors).ok()
    }
}
