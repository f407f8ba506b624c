use super::{Split, SplitBoundaries, SeriesFrame};
use crate::error::{Error, Result};
use crate::linalg::{fit_stats, standardize, ColumnStats, Matrix};
use crate::projection::ProjectionMode;
use crate::scalar::Scalar;

/// Sliding lookback/horizon windows over a standardized frame.
///
/// A window starting at row `s` has lookback rows `s..s+H` and label rows
/// `s+H..s+H+T`; windows never cross a split boundary. Standardization uses
/// per-variate statistics of the training rows only.
#[derive(Debug, Clone)]
pub struct WindowedDataset<S: Scalar> {
    frame: SeriesFrame<S>,
    standardized: Matrix<S>,
    stats: ColumnStats<S>,
    bounds: SplitBoundaries,
    lookback: usize,
    horizon: usize,
    stride: usize,
    starts: [Vec<usize>; 3],
}

/// Rows of (lookback, label) pairs in window-major, variate-minor order.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch<S: Scalar> {
    /// `rows x H`
    pub inputs: Matrix<S>,
    /// `rows x T`
    pub labels: Matrix<S>,
    /// Variate index of each row.
    pub variates: Vec<usize>,
}

impl<S: Scalar> Batch<S> {
    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.rows() == 0
    }

    /// Row indices belonging to each variate, for `d` in `0..variates`.
    pub fn rows_by_variate(&self, variates: usize) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); variates];
        for (r, &d) in self.variates.iter().enumerate() {
            groups[d].push(r);
        }
        groups
    }
}

pub fn make_windows<S: Scalar>(
    frame: SeriesFrame<S>,
    bounds: SplitBoundaries,
    lookback: usize,
    horizon: usize,
    stride: usize,
) -> Result<WindowedDataset<S>> {
    if lookback == 0 || horizon == 0 || stride == 0 {
        return Err(Error::config("lookback, horizon and stride must be positive"));
    }
    if bounds.test.end > frame.len() || bounds.train.end > bounds.val.start || bounds.val.end > bounds.test.start {
        return Err(Error::dim("split boundaries do not fit the frame in order"));
    }
    let span = lookback + horizon;
    let mut starts: [Vec<usize>; 3] = Default::default();
    for split in Split::ALL {
        let r = bounds.range(split);
        if r.len() < span {
            return Err(Error::dim(format!(
                "{split:?} split has {} rows, a window needs {span}",
                r.len()
            )));
        }
        starts[split.index()] = (r.start..=r.end - span).step_by(stride).collect();
    }
    let train_rows = frame.values().row_block(bounds.train.clone())?;
    let stats = fit_stats(&train_rows)?;
    let standardized = standardize(frame.values(), &stats)?;
    Ok(WindowedDataset {
        frame,
        standardized,
        stats,
        bounds,
        lookback,
        horizon,
        stride,
        starts,
    })
}

impl<S: Scalar> WindowedDataset<S> {
    pub fn frame(&self) -> &SeriesFrame<S> {
        &self.frame
    }

    /// Frame values standardized with the training statistics.
    pub fn standardized(&self) -> &Matrix<S> {
        &self.standardized
    }

    /// Per-variate training statistics.
    pub fn stats(&self) -> &ColumnStats<S> {
        &self.stats
    }

    pub fn bounds(&self) -> &SplitBoundaries {
        &self.bounds
    }

    pub fn lookback(&self) -> usize {
        self.lookback
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn variates(&self) -> usize {
        self.frame.variates()
    }

    /// Start rows of every window in `split`.
    pub fn window_starts(&self, split: Split) -> &[usize] {
        &self.starts[split.index()]
    }

    pub fn window_count(&self, split: Split) -> usize {
        self.starts[split.index()].len()
    }

    /// Batch of the listed windows (positions within `split`), all variates.
    pub fn batch(&self, split: Split, windows: &[usize]) -> Result<Batch<S>> {
        let starts = self.window_starts(split);
        let d = self.variates();
        let (h, t) = (self.lookback, self.horizon);
        let rows = windows.len() * d;
        let mut inputs = Vec::with_capacity(rows * h);
        let mut labels = Vec::with_capacity(rows * t);
        let mut variates = Vec::with_capacity(rows);
        for &w in windows {
            let s = *starts.get(w).ok_or_else(|| {
                Error::dim(format!("window {w} out of range for {split:?} ({} windows)", starts.len()))
            })?;
            for v in 0..d {
                inputs.extend((s..s + h).map(|r| self.standardized.get(r, v)));
                labels.extend((s + h..s + h + t).map(|r| self.standardized.get(r, v)));
                variates.push(v);
            }
        }
        Ok(Batch {
            inputs: Matrix::from_vec(rows, h, inputs)?,
            labels: Matrix::from_vec(rows, t, labels)?,
            variates,
        })
    }

    /// Every window of `split`.
    pub fn full_batch(&self, split: Split) -> Result<Batch<S>> {
        let n = self.window_count(split);
        if n == 0 {
            return Err(Error::dim(format!("{split:?} split has no windows")));
        }
        self.batch(split, &(0..n).collect::<Vec<_>>())
    }

    /// Standardized label windows of `split`: one `(windows * D) x T` matrix
    /// in window-major, variate-minor row order (pooled), or one
    /// `windows x T` matrix per variate.
    pub fn label_matrix(&self, split: Split, mode: ProjectionMode) -> Result<Vec<Matrix<S>>> {
        let all = self.full_batch(split)?;
        Ok(match mode {
            ProjectionMode::Pooled => vec![all.labels],
            ProjectionMode::PerVariate => all
                .rows_by_variate(self.variates())
                .iter()
                .map(|rows| all.labels.select_rows(rows))
                .collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{split_chronological, SplitSpec};

    fn ramp_frame(n: usize, d: usize) -> SeriesFrame<f64> {
        let values = Matrix::from_fn(n, d, |i, j| (i * 10 + j) as f64).unwrap();
        SeriesFrame::new(None, values, (0..d).map(|j| format!("v{j}")).collect()).unwrap()
    }

    fn three_way(n_train: usize, n_val: usize, n_test: usize) -> SplitBoundaries {
        SplitBoundaries {
            train: 0..n_train,
            val: n_train..n_train + n_val,
            test: n_train + n_val..n_train + n_val + n_test,
        }
    }

    #[test]
    fn window_counts() {
        let (h, t) = (4, 3);
        let ds = make_windows(ramp_frame(40, 1), three_way(h + t, h + t + 5, 20), h, t, 1).unwrap();
        assert_eq!(ds.window_count(Split::Train), 1);
        assert_eq!(ds.window_count(Split::Val), 6);
        assert_eq!(ds.window_count(Split::Test), 20 - h - t + 1);
        assert!(make_windows(ramp_frame(40, 1), three_way(h + t - 1, 10, 10), h, t, 1).is_err());
    }

    #[test]
    fn no_leakage_across_splits() {
        let frame = ramp_frame(200, 2);
        let b = split_chronological(200, &SplitSpec::default(), 12).unwrap();
        let ds = make_windows(frame, b.clone(), 8, 4, 1).unwrap();
        for split in Split::ALL {
            let r = b.range(split);
            for &s in ds.window_starts(split) {
                assert!(s >= r.start && s + 12 <= r.end);
            }
        }
        let last_train_label = ds.window_starts(Split::Train).last().unwrap() + 12 - 1;
        assert!(last_train_label < b.val.start);
    }

    #[test]
    fn label_matrix_matches_loop_oracle() {
        let frame = ramp_frame(60, 3);
        let ds = make_windows(frame.clone(), three_way(20, 20, 20), 3, 2, 1).unwrap();
        let stats = ds.stats();
        let pooled = &ds.label_matrix(Split::Train, ProjectionMode::Pooled).unwrap()[0];
        let n = ds.window_count(Split::Train);
        assert_eq!(pooled.shape(), (n * 3, 2));
        for w in 0..n {
            for v in 0..3 {
                for j in 0..2 {
                    let raw = frame.values().get(w + 3 + j, v);
                    let expect = (raw - stats.means[v]) / stats.stds[v];
                    assert_eq!(pooled.get(w * 3 + v, j), expect);
                }
            }
        }
        let per = ds.label_matrix(Split::Train, ProjectionMode::PerVariate).unwrap();
        assert_eq!(per.len(), 3);
        assert_eq!(per[2].row(4), pooled.row(4 * 3 + 2));
    }

    #[test]
    fn single_window_single_variate() {
        let frame = ramp_frame(30, 1);
        let ds = make_windows(frame, three_way(10, 10, 10), 6, 4, 1).unwrap();
        let y = &ds.label_matrix(Split::Val, ProjectionMode::Pooled).unwrap()[0];
        assert_eq!(y.shape(), (1, 4));
        let expect: Vec<f64> = (16..20).map(|r| ds.standardized().get(r, 0)).collect();
        assert_eq!(y.row(0), expect.as_slice());
    }

    #[test]
    fn stats_come_from_train_rows_only() {
        let frame = ramp_frame(90, 2);
        let b = three_way(30, 30, 30);
        let a = make_windows(frame.clone(), b.clone(), 5, 5, 1).unwrap();
        let mut vals = frame.values().clone();
        for i in 60..90 {
            for x in vals.row_mut(i) {
                *x = -1e6;
            }
        }
        let changed = make_windows(frame.with_values(vals).unwrap(), b, 5, 5, 1).unwrap();
        assert_eq!(a.stats(), changed.stats());
    }

    #[test]
    fn pooled_train_labels_are_centred() {
        let spec = crate::data::SynthSpec {
            ar: vec![0.5],
            length: 4000,
            variates: 2,
            ..Default::default()
        };
        let frame = crate::data::synth_ar::<f64>(&spec).unwrap();
        let b = split_chronological(4000, &SplitSpec::default(), 40).unwrap();
        let ds = make_windows(frame, b, 24, 16, 1).unwrap();
        let y = &ds.label_matrix(Split::Train, ProjectionMode::Pooled).unwrap()[0];
        let means = crate::linalg::fit_stats(y).unwrap().means;
        assert!(means.iter().all(|m| m.abs() < 0.05), "{means:?}");
    }

    #[test]
    fn stride_thins_windows() {
        let ds = make_windows(ramp_frame(60, 1), three_way(20, 20, 20), 5, 5, 3).unwrap();
        assert_eq!(ds.window_starts(Split::Train), &[0, 3, 6, 9]);
    }
}
