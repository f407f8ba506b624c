use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{LinearForecaster, LinearHead};
use crate::error::{Error, Result};
use crate::linalg::{ColumnStats, Matrix};
use crate::scalar::Scalar;

const FORMAT: &str = "decorr-checkpoint";
const VERSION: u32 = 1;

/// A trained forecaster together with the data statistics and basis it was
/// trained against.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<S: Scalar> {
    pub model: LinearForecaster<S>,
    pub stats: ColumnStats<S>,
    /// Fingerprint of the basis set used by the objective, if any.
    pub basis_fingerprint: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct Stored {
    format: String,
    version: u32,
    lookback: usize,
    horizon: usize,
    heads: Vec<StoredHead>,
    means: Vec<f64>,
    stds: Vec<f64>,
    basis_fingerprint: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct StoredHead {
    /// Row-major `H x T`.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

fn to_f64<S: Scalar>(v: &[S]) -> Vec<f64> {
    v.iter().map(|x| x.as_f64()).collect()
}

fn from_f64<S: Scalar>(v: &[f64]) -> Vec<S> {
    v.iter().map(|&x| S::lit(x)).collect()
}

impl<S: Scalar> Checkpoint<S> {
    pub fn to_json(&self) -> Result<String> {
        let stored = Stored {
            format: FORMAT.into(),
            version: VERSION,
            lookback: self.model.lookback(),
            horizon: self.model.horizon(),
            heads: self
                .model
                .heads()
                .iter()
                .map(|h| StoredHead {
                    weights: to_f64(h.weights.as_slice()),
                    bias: to_f64(&h.bias),
                })
                .collect(),
            means: to_f64(&self.stats.means),
            stds: to_f64(&self.stats.stds),
            basis_fingerprint: self.basis_fingerprint.clone(),
        };
        serde_json::to_string_pretty(&stored).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Stored = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if s.format != FORMAT {
            return Err(Error::Format(format!("not a checkpoint file (format `{}`)", s.format)));
        }
        if s.version != VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {}", s.version)));
        }
        let heads = s
            .heads
            .iter()
            .map(|h| {
                Ok(LinearHead {
                    weights: Matrix::from_vec(s.lookback, s.horizon, from_f64(&h.weights))?,
                    bias: from_f64(&h.bias),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            model: LinearForecaster::from_heads(s.lookback, s.horizon, heads)?,
            stats: ColumnStats::new(from_f64(&s.means), from_f64(&s.stds))?,
            basis_fingerprint: s.basis_fingerprint,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
