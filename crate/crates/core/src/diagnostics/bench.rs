use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{fit_stats, Matrix};
use crate::projection::fit_projection;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub m: usize,
    pub t: usize,
    pub median_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingBench {
    pub rows: Vec<BenchRow>,
}

/// Times `fit_projection` (statistics, standardization and SVD) on Gaussian
/// labels of each size, reporting the median of `repeats` runs.
pub fn scaling_bench<S: Scalar>(sizes: &[(usize, usize)], repeats: usize, seed: u64) -> Result<ScalingBench> {
    if sizes.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::config("bench sizes must be sorted"));
    }
    if repeats == 0 {
        return Err(Error::config("bench needs at least one repeat"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(sizes.len());
    for &(m, t) in sizes {
        let labels = Matrix::from_fn(m, t, |_, _| {
            let g: f64 = StandardNormal.sample(&mut rng);
            S::lit(g)
        })?;
        let mut times = Vec::with_capacity(repeats);
        for _ in 0..repeats {
            let start = Instant::now();
            let stats = fit_stats(&labels)?;
            let basis = fit_projection(&labels, &stats, true)?;
            times.push(start.elapsed().as_secs_f64());
            std::hint::black_box(basis);
        }
        times.sort_by(f64::total_cmp);
        rows.push(BenchRow {
            m,
            t,
            median_seconds: times[times.len() / 2],
        });
    }
    Ok(ScalingBench { rows })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 || xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

impl ScalingBench {
    /// Slope of time against `T` over the rows with `m == m`.
    pub fn slope_in_t(&self, m: usize) -> Option<f64> {
        let rows: Vec<&BenchRow> = self.rows.iter().filter(|r| r.m == m).collect();
        let xs: Vec<f64> = rows.iter().map(|r| r.t as f64).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.median_seconds).collect();
        log_log_slope(&xs, &ys)
    }

    /// Slope of time against `m` over the rows with `T == t`.
    pub fn slope_in_m(&self, t: usize) -> Option<f64> {
        let rows: Vec<&BenchRow> = self.rows.iter().filter(|r| r.t == t).collect();
        let xs: Vec<f64> = rows.iter().map(|r| r.m as f64).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.median_seconds).collect();
        log_log_slope(&xs, &ys)
    }

    /// Columns `m, T, median_seconds`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let to_err = |e: csv::Error| Error::Format(e.to_string());
        w.write_record(["m", "T", "median_seconds"]).map_err(to_err)?;
        for r in &self.rows {
            w.write_record([r.m.to_string(), r.t.to_string(), r.median_seconds.to_string()])
                .map_err(to_err)?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}
