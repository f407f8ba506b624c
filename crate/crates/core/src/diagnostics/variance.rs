use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projection::{truncation_k, ComponentMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapturedVariance {
    pub gamma: f64,
    pub k: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceProfile {
    /// Population (`1/m`) variance of each component column.
    pub variances: Vec<f64>,
    /// Share of the total variance in the leading `round(gamma * K)`
    /// components, for gamma = 0.1, 0.2, ..., 1.
    pub captured: Vec<CapturedVariance>,
}

pub fn variance_profile<S: Scalar>(z: &ComponentMatrix<S>) -> Result<VarianceProfile> {
    let (m, k) = z.z.shape();
    if m < 2 {
        return Err(Error::dim(format!("variance profile needs at least 2 rows, got {m}")));
    }
    let variances: Vec<f64> = (0..k)
        .map(|j| {
            let col = z.z.col(j);
            let mean = col.iter().map(|v| v.as_f64()).sum::<f64>() / m as f64;
            col.iter().map(|v| (v.as_f64() - mean).powi(2)).sum::<f64>() / m as f64
        })
        .collect();
    let total: f64 = variances.iter().sum();
    let captured = (1..=10)
        .map(|i| {
            let gamma = i as f64 / 10.0;
            let kk = truncation_k(gamma, k)?;
            let head: f64 = variances[..kk].iter().sum();
            Ok(CapturedVariance {
                gamma,
                k: kk,
                fraction: if total > 0.0 { head / total } else { 0.0 },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VarianceProfile { variances, captured })
}

impl VarianceProfile {
    /// True when no variance exceeds its predecessor by more than `tol`
    /// relative to the largest.
    pub fn is_non_increasing(&self, tol: f64) -> bool {
        let scale = self.variances.first().copied().unwrap_or(0.0).abs().max(f64::MIN_POSITIVE);
        self.variances.windows(2).all(|w| w[1] <= w[0] + tol * scale)
    }

    pub fn captured_at(&self, gamma: f64) -> Option<f64> {
        self.captured.iter().find(|c| (c.gamma - gamma).abs() < 1e-9).map(|c| c.fraction)
    }

    /// Columns `component, variance`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let to_err = |e: csv::Error| Error::Format(e.to_string());
        w.write_record(["component", "variance"]).map_err(to_err)?;
        for (j, v) in self.variances.iter().enumerate() {
            w.write_record([j.to_string(), v.to_string()]).map_err(to_err)?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))
    }

    /// Columns `gamma, k, fraction`.
    pub fn write_gamma_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let to_err = |e: csv::Error| Error::Format(e.to_string());
        w.write_record(["gamma", "k", "fraction"]).map_err(to_err)?;
        for c in &self.captured {
            w.write_record([format!("{:.1}", c.gamma), c.k.to_string(), c.fraction.to_string()])
                .map_err(to_err)?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))
    }

    pub fn save_csv(&self, profile: impl AsRef<Path>, gamma_sweep: impl AsRef<Path>) -> Result<()> {
        for (path, gamma) in [(profile.as_ref(), false), (gamma_sweep.as_ref(), true)] {
            let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
            let out = std::io::BufWriter::new(file);
            if gamma {
                self.write_gamma_csv(out)?;
            } else {
                self.write_csv(out)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{fit_stats, Matrix};
    use crate::projection::{fit_projection, transform};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn components(y: &Matrix<f64>) -> (ComponentMatrix<f64>, Vec<f64>) {
        let stats = fit_stats(y).unwrap();
        let basis = fit_projection(y, &stats, true).unwrap();
        let t = y.cols();
        let z = transform(&basis, &basis.prepare(y).unwrap(), t).unwrap();
        (z, basis.singular_values().to_vec())
    }

    #[test]
    fn variances_are_squared_singular_values_over_m() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let y = Matrix::from_fn(300, 6, |_, j| {
            let g: f64 = StandardNormal.sample(&mut rng);
            g * (j + 1) as f64 + j as f64
        })
        .unwrap();
        let (z, sigma) = components(&y);
        let p = variance_profile(&z).unwrap();
        for (v, s) in p.variances.iter().zip(&sigma) {
            assert!((v - s * s / 300.0).abs() < 1e-9, "{v} vs {}", s * s / 300.0);
        }
        assert!(p.is_non_increasing(1e-12));
        assert_eq!(p.captured.len(), 10);
        assert!((p.captured_at(1.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn white_noise_is_nearly_flat() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let y = Matrix::from_fn(5000, 24, |_, _| StandardNormal.sample(&mut rng)).unwrap();
        let p = variance_profile(&components(&y).0).unwrap();
        let (max, min) = (p.variances[0], *p.variances.last().unwrap());
        assert!(max / min < 2.0, "{max} / {min}");
    }

    #[test]
    fn rank_one_labels_put_everything_first() {
        let y = Matrix::from_fn(40, 5, |i, j| (i as f64 - 19.5) * (j as f64 + 1.0)).unwrap();
        let p = variance_profile(&components(&y).0).unwrap();
        assert!((p.captured[0].fraction - 1.0).abs() < 1e-12);
        assert!(p.variances[1..].iter().all(|v| *v < 1e-20));
    }

    #[test]
    fn csv_exports() {
        let y = Matrix::from_fn(10, 3, |i, j| ((i * 7 + j * 3) % 5) as f64).unwrap();
        let p = variance_profile(&components(&y).0).unwrap();
        let mut buf = Vec::new();
        p.write_gamma_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("gamma,k,fraction\n0.1,1,"));
        assert_eq!(text.lines().count(), 11);
    }
}
