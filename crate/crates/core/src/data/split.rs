use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Self::Train),
            "val" => Ok(Self::Val),
            "test" => Ok(Self::Test),
            other => Err(Error::config(format!("unknown split `{other}`"))),
        }
    }
}

/// How to cut a frame into train / validation / test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SplitSpec {
    Ratios { train: f64, val: f64, test: f64 },
    /// 12 / 4 / 4 months of 30 days at hourly resolution.
    EttHourly,
    /// 12 / 4 / 4 months of 30 days at 15-minute resolution.
    EttMinute,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self::Ratios {
            train: 0.7,
            val: 0.1,
            test: 0.2,
        }
    }
}

impl std::str::FromStr for SplitSpec {
    type Err = Error;

    /// Accepts `ett-hourly`, `ett-minute`, or three comma-separated ratios.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ett-hourly" => return Ok(Self::EttHourly),
            "ett-minute" => return Ok(Self::EttMinute),
            _ => {}
        }
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::config(format!("bad split `{s}`: expected ett-hourly, ett-minute or a,b,c ratios")))?;
        match parts[..] {
            [train, val, test] => Ok(Self::Ratios { train, val, test }),
            _ => Err(Error::config(format!("split `{s}` needs exactly three ratios"))),
        }
    }
}

/// Contiguous, chronological row ranges of the three splits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitBoundaries {
    pub train: Range<usize>,
    pub val: Range<usize>,
    pub test: Range<usize>,
}

impl SplitBoundaries {
    pub fn range(&self, split: Split) -> &Range<usize> {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }
}

/// Splits `n` rows chronologically; every split must hold at least
/// `min_len` rows (one full lookback plus horizon window).
pub fn split_chronological(n: usize, spec: &SplitSpec, min_len: usize) -> Result<SplitBoundaries> {
    let (train, val, test) = match *spec {
        SplitSpec::Ratios { train, val, test } => {
            if [train, val, test].iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
                return Err(Error::config("split ratios must be positive"));
            }
            let sum = train + val + test;
            if sum > 1.0 + 1e-9 {
                return Err(Error::config(format!("split ratios sum to {sum} > 1")));
            }
            let n_train = (n as f64 * train).floor() as usize;
            let n_test = (n as f64 * test).floor() as usize;
            let n_val = if (sum - 1.0).abs() <= 1e-9 {
                n - n_train - n_test
            } else {
                (n as f64 * val).floor() as usize
            };
            (n_train, n_val, n_test)
        }
        SplitSpec::EttHourly => ett_lengths(n, 24)?,
        SplitSpec::EttMinute => ett_lengths(n, 96)?,
    };
    for (name, len) in [("train", train), ("validation", val), ("test", test)] {
        if len < min_len.max(1) {
            return Err(Error::dim(format!(
                "{name} split has {len} rows, fewer than the {min_len} one window needs"
            )));
        }
    }
    Ok(SplitBoundaries {
        train: 0..train,
        val: train..train + val,
        test: train + val..train + val + test,
    })
}

fn ett_lengths(n: usize, rows_per_day: usize) -> Result<(usize, usize, usize)> {
    let month = 30 * rows_per_day;
    let (train, val, test) = (12 * month, 4 * month, 4 * month);
    if n < train + val + test {
        return Err(Error::dim(format!(
            "ETT preset needs {} rows, frame has {n}",
            train + val + test
        )));
    }
    Ok((train, val, test))
}
