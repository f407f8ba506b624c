use chrono::{Duration, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::SeriesFrame;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

const BURN_IN: usize = 500;

/// Autoregressive series recipe: `x_t = sum_i ar[i] x_{t-1-i} + noise`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub ar: Vec<f64>,
    pub noise_std: f64,
    pub length: usize,
    pub variates: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            ar: vec![0.9],
            noise_std: 1.0,
            length: 10_000,
            variates: 1,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.length == 0 || self.variates == 0 {
            return Err(Error::config("synthetic length and variate count must be positive"));
        }
        if !(self.noise_std >= 0.0) || !self.noise_std.is_finite() {
            return Err(Error::config(format!("noise std must be finite and >= 0, got {}", self.noise_std)));
        }
        if self.ar.iter().any(|c| !c.is_finite()) {
            return Err(Error::config("AR coefficients must be finite"));
        }
        if !is_stationary(&self.ar) {
            return Err(Error::config(format!(
                "AR coefficients {:?} are not stationary",
                self.ar
            )));
        }
        Ok(())
    }
}

/// Step-down (Schur-Cohn) test: the AR polynomial has all roots outside the
/// unit circle iff every reflection coefficient has magnitude below one.
pub fn is_stationary(ar: &[f64]) -> bool {
    let mut a = ar.to_vec();
    while let Some(&kappa) = a.last() {
        if kappa.abs() >= 1.0 {
            return false;
        }
        let p = a.len();
        let denom = 1.0 - kappa * kappa;
        let reduced: Vec<f64> = (0..p - 1).map(|j| (a[j] + kappa * a[p - 2 - j]) / denom).collect();
        a = reduced;
    }
    true
}

/// Simulates `spec.variates` independent AR series, discarding a burn-in.
/// Timestamps are hourly from 2016-07-01.
pub fn synth_ar<S: Scalar>(spec: &SynthSpec) -> Result<SeriesFrame<S>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_std).map_err(|e| Error::config(e.to_string()))?;
    let p = spec.ar.len();
    let total = BURN_IN + spec.length;
    let mut columns = Vec::with_capacity(spec.variates);
    for _ in 0..spec.variates {
        let mut x = vec![0.0f64; total];
        for t in 0..total {
            let mut v = noise.sample(&mut rng);
            for i in 0..p.min(t) {
                v += spec.ar[i] * x[t - 1 - i];
            }
            x[t] = v;
        }
        columns.push(x[BURN_IN..].iter().map(|&v| S::lit(v)).collect::<Vec<S>>());
    }
    let values = Matrix::from_columns(&columns)?;
    let start = NaiveDate::from_ymd_opt(2016, 7, 1)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid start date");
    let stamps = (0..spec.length).map(|i| start + Duration::hours(i as i64)).collect();
    let names = (0..spec.variates).map(|d| format!("x{d}")).collect();
    SeriesFrame::new(Some(stamps), values, names)
}
