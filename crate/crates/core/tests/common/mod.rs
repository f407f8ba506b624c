//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use decorr::Matrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix<f64> {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng)).unwrap()
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn to_rows(m: &Matrix<f64>) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// `A^T A` by explicit triple loop.
pub fn gram(a: &Matrix<f64>) -> Vec<Vec<f64>> {
    let (m, n) = a.shape();
    let mut g = vec![vec![0.0; n]; n];
    for (i, gi) in g.iter_mut().enumerate() {
        for (j, gij) in gi.iter_mut().enumerate() {
            *gij = (0..m).map(|r| a.get(r, i) * a.get(r, j)).sum();
        }
    }
    g
}

/// Householder reduction of symmetric `g` to tridiagonal form: `(diagonal, off-diagonal)`.
fn tridiagonalize(g: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = g.len();
    let mut a: Vec<Vec<f64>> = g.to_vec();
    for k in 0..n.saturating_sub(2) {
        let alpha_sq: f64 = (k + 1..n).map(|i| a[i][k] * a[i][k]).sum();
        if alpha_sq == 0.0 {
            continue;
        }
        let alpha = -a[k + 1][k].signum() * alpha_sq.sqrt();
        let mut v = vec![0.0; n];
        v[k + 1] = a[k + 1][k] - alpha;
        for i in k + 2..n {
            v[i] = a[i][k];
        }
        let vv: f64 = v.iter().map(|x| x * x).sum();
        if vv == 0.0 {
            continue;
        }
        // a <- H a H with H = I - 2 v v^T / vv
        let p: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[i][j] * v[j]).sum::<f64>() * 2.0 / vv).collect();
        let c: f64 = (0..n).map(|i| v[i] * p[i]).sum::<f64>() / vv;
        let w: Vec<f64> = (0..n).map(|i| p[i] - c * v[i]).collect();
        for i in 0..n {
            for j in 0..n {
                a[i][j] -= v[i] * w[j] + w[i] * v[j];
            }
        }
    }
    let diag = (0..n).map(|i| a[i][i]).collect();
    let off = (1..n).map(|i| a[i][i - 1]).collect();
    (diag, off)
}

/// Sturm count: eigenvalues of the tridiagonal `(d, e)` below `shift`.
fn count_below(d: &[f64], e: &[f64], shift: f64) -> usize {
    let tiny = f64::EPSILON * d.iter().chain(e).fold(1.0f64, |m, x| m.max(x.abs()));
    let mut q = d[0] - shift;
    let mut count = usize::from(q < 0.0);
    for i in 1..d.len() {
        if q.abs() < tiny {
            q = -tiny;
        }
        q = d[i] - shift - e[i - 1] * e[i - 1] / q;
        count += usize::from(q < 0.0);
    }
    count
}

/// Eigenvalues of a symmetric matrix by Sturm bisection, descending.
pub fn symmetric_eigenvalues_bisection(g: &[Vec<f64>]) -> Vec<f64> {
    let n = g.len();
    let (d, e) = tridiagonalize(g);
    // Gershgorin bounds
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    let pad = 1e-12 * (hi - lo).abs().max(1.0);
    lo -= pad;
    hi += pad;
    let mut out = Vec::with_capacity(n);
    // the j-th smallest eigenvalue is the smallest x with count_below(x) > j
    for j in 0..n {
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if count_below(&d, &e, mid) > j {
                b = mid;
            } else {
                a = mid;
            }
        }
        out.push(0.5 * (a + b));
    }
    out.reverse();
    out
}

/// Singular values of `a` from the eigenvalues of the smaller of `A^T A` and
/// `A A^T`, padded with zeros to `a.cols()`.
pub fn singular_values_oracle(a: &Matrix<f64>) -> Vec<f64> {
    let g = if a.rows() < a.cols() { gram(&a.transpose()) } else { gram(a) };
    let mut out: Vec<f64> = symmetric_eigenvalues_bisection(&g)
        .into_iter()
        .map(|l| l.max(0.0).sqrt())
        .collect();
    out.resize(a.cols(), 0.0);
    out
}

/// Fused loss by explicit loops: `alpha * mean|(yhat - y) P_K| + (1 - alpha) * mean (yhat - y)^2`.
pub fn fused_loss_loops(yhat: &Matrix<f64>, y: &Matrix<f64>, p: &Matrix<f64>, k: usize, alpha: f64) -> f64 {
    let (m, t) = y.shape();
    let mut sq = 0.0;
    for i in 0..m {
        for j in 0..t {
            let d = yhat.get(i, j) - y.get(i, j);
            sq += d * d;
        }
    }
    let mut l1 = 0.0;
    for i in 0..m {
        for c in 0..k {
            let mut zh = 0.0;
            let mut z = 0.0;
            for j in 0..t {
                zh += yhat.get(i, j) * p.get(j, c);
                z += y.get(i, j) * p.get(j, c);
            }
            l1 += (zh - z).abs();
        }
    }
    let tmse = sq / (m * t) as f64;
    let comp = l1 / (m * k) as f64;
    alpha * comp + (1.0 - alpha) * tmse
}

/// `v^T S^-1 v - v^T v - log det(S) / 2` for a 2x2 `S` by the closed-form inverse.
pub fn bias_2x2(v: [f64; 2], s: [[f64; 2]; 2]) -> f64 {
    let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    let inv = [[s[1][1] / det, -s[0][1] / det], [-s[1][0] / det, s[0][0] / det]];
    let mut quad = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            quad += v[i] * inv[i][j] * v[j];
        }
    }
    quad - (v[0] * v[0] + v[1] * v[1]) - 0.5 * det.ln()
}

/// Largest `|A^T A - I|` entry.
pub fn orthonormality_gap(a: &Matrix<f64>) -> f64 {
    let g = gram(a);
    let mut worst = 0.0f64;
    for (i, row) in g.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - target).abs());
        }
    }
    worst
}

/// Largest normalized inner product between distinct columns.
pub fn max_column_correlation(z: &Matrix<f64>) -> f64 {
    let cols = to_rows(&z.transpose());
    let norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let mut worst = 0.0f64;
    for p in 0..cols.len() {
        for q in p + 1..cols.len() {
            let d: f64 = cols[p].iter().zip(&cols[q]).map(|(a, b)| a * b).sum();
            worst = worst.max(d.abs() / (norms[p] * norms[q]));
        }
    }
    worst
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
