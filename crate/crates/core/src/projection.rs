//! Label-space projection: fit an orthonormal basis whose columns produce
//! mutually orthogonal components ordered by variance, then move sequences in
//! and out of component space.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{dot, fit_stats, standardize, svd, ColumnStats, Matrix};
use crate::scalar::Scalar;

/// How multivariate label windows share a basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProjectionMode {
    /// One basis fitted on all variates' windows stacked as rows.
    #[default]
    Pooled,
    /// One basis per variate.
    PerVariate,
}

impl std::str::FromStr for ProjectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pooled" => Ok(Self::Pooled),
            "per-variate" => Ok(Self::PerVariate),
            other => Err(Error::config(format!(
                "unknown projection mode `{other}` (expected pooled or per-variate)"
            ))),
        }
    }
}

impl std::fmt::Display for ProjectionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Pooled => "pooled",
            Self::PerVariate => "per-variate",
        })
    }
}

/// Fitted projection `P*` (T x T), columns sorted by descending singular value.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionBasis<S: Scalar> {
    p_star: Matrix<S>,
    singular_values: Vec<S>,
    label_stats: ColumnStats<S>,
    standardized: bool,
}

/// Components `z = seq * P*[:, ..k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentMatrix<S: Scalar> {
    pub z: Matrix<S>,
    pub k: usize,
    pub source_horizon: usize,
}

impl<S: Scalar> ProjectionBasis<S> {
    /// Assembles a basis from parts, checking shape and orthonormality.
    pub fn from_parts(
        p_star: Matrix<S>,
        singular_values: Vec<S>,
        label_stats: ColumnStats<S>,
        standardized: bool,
    ) -> Result<Self> {
        let t = p_star.cols();
        if !p_star.is_square() || t == 0 {
            return Err(Error::dim(format!(
                "projection must be square and non-empty, got {}x{}",
                p_star.rows(),
                t
            )));
        }
        if singular_values.len() != t || label_stats.len() != t {
            return Err(Error::dim(format!(
                "basis of horizon {t} has {} singular values and {} stats columns",
                singular_values.len(),
                label_stats.len()
            )));
        }
        if singular_values.windows(2).any(|w| w[1] > w[0]) || singular_values.iter().any(|&s| s < S::zero()) {
            return Err(Error::Numeric("singular values must be non-negative and descending".into()));
        }
        let basis = Self {
            p_star,
            singular_values,
            label_stats,
            standardized,
        };
        let tol = if S::epsilon() < S::lit(1e-10) { 1e-10 } else { 1e-4 };
        if basis.orthonormality_error() > S::lit(tol) {
            return Err(Error::Numeric("projection columns are not orthonormal".into()));
        }
        Ok(basis)
    }

    pub fn p_star(&self) -> &Matrix<S> {
        &self.p_star
    }

    pub fn singular_values(&self) -> &[S] {
        &self.singular_values
    }

    pub fn label_stats(&self) -> &ColumnStats<S> {
        &self.label_stats
    }

    /// Whether labels were standardized with `label_stats` before the SVD.
    pub fn standardized(&self) -> bool {
        self.standardized
    }

    pub fn horizon(&self) -> usize {
        self.p_star.cols()
    }

    /// `max |P*^T P* - I|`.
    pub fn orthonormality_error(&self) -> S {
        self.p_star
            .gram()
            .max_abs_diff(&Matrix::identity(self.horizon()))
            .unwrap_or_else(S::infinity)
    }

    /// Applies the fit-time preprocessing (standardization or nothing) to labels.
    pub fn prepare(&self, labels: &Matrix<S>) -> Result<Matrix<S>> {
        if self.standardized {
            standardize(labels, &self.label_stats)
        } else {
            self.check_width(labels)?;
            Ok(labels.clone())
        }
    }

    /// The leading `k` basis columns.
    pub fn leading(&self, k: usize) -> Result<Matrix<S>> {
        self.check_k(k)?;
        self.p_star.columns(0..k)
    }

    fn check_width(&self, seq: &Matrix<S>) -> Result<()> {
        if seq.cols() != self.horizon() {
            return Err(Error::dim(format!(
                "sequence has {} steps, basis horizon is {}",
                seq.cols(),
                self.horizon()
            )));
        }
        Ok(())
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.horizon() {
            return Err(Error::dim(format!(
                "component count {k} outside [1, {}]",
                self.horizon()
            )));
        }
        Ok(())
    }
}

/// Fits `P*` as the right singular vectors of the (optionally standardized)
/// training label matrix.
pub fn fit_projection<S: Scalar>(
    labels: &Matrix<S>,
    stats: &ColumnStats<S>,
    standardize_first: bool,
) -> Result<ProjectionBasis<S>> {
    if labels.rows() < 2 {
        return Err(Error::dim(format!(
            "projection fit needs at least 2 label rows, got {}",
            labels.rows()
        )));
    }
    if labels.cols() != stats.len() {
        return Err(Error::dim(format!(
            "labels have {} steps but stats cover {}",
            labels.cols(),
            stats.len()
        )));
    }
    let prepared;
    let y = if standardize_first {
        prepared = standardize(labels, stats)?;
        &prepared
    } else {
        labels
    };
    let decomposition = svd(y, false)?;
    ProjectionBasis::from_parts(
        decomposition.right_vectors,
        decomposition.singular_values,
        stats.clone(),
        standardize_first,
    )
}

/// One basis (pooled) or one per variate.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet<S: Scalar> {
    mode: ProjectionMode,
    bases: Vec<ProjectionBasis<S>>,
}

impl<S: Scalar> BasisSet<S> {
    pub fn new(mode: ProjectionMode, bases: Vec<ProjectionBasis<S>>) -> Result<Self> {
        if bases.is_empty() {
            return Err(Error::dim("basis set is empty"));
        }
        if mode == ProjectionMode::Pooled && bases.len() != 1 {
            return Err(Error::dim("pooled mode holds exactly one basis"));
        }
        let t = bases[0].horizon();
        if bases.iter().any(|b| b.horizon() != t) {
            return Err(Error::dim("bases in a set must share the horizon"));
        }
        Ok(Self { mode, bases })
    }

    pub fn pooled(basis: ProjectionBasis<S>) -> Self {
        Self {
            mode: ProjectionMode::Pooled,
            bases: vec![basis],
        }
    }

    /// Fits stats and a basis for each label matrix: one matrix for pooled
    /// mode, one per variate otherwise.
    pub fn fit(label_sets: &[Matrix<S>], mode: ProjectionMode, standardize_first: bool) -> Result<Self> {
        if mode == ProjectionMode::Pooled && label_sets.len() != 1 {
            return Err(Error::dim(format!(
                "pooled mode expects one label matrix, got {}",
                label_sets.len()
            )));
        }
        let bases = label_sets
            .iter()
            .map(|y| fit_projection(y, &fit_stats(y)?, standardize_first))
            .collect::<Result<Vec<_>>>()?;
        Self::new(mode, bases)
    }

    pub fn mode(&self) -> ProjectionMode {
        self.mode
    }

    pub fn bases(&self) -> &[ProjectionBasis<S>] {
        &self.bases
    }

    pub fn horizon(&self) -> usize {
        self.bases[0].horizon()
    }

    /// The basis responsible for variate `d`.
    pub fn for_variate(&self, d: usize) -> &ProjectionBasis<S> {
        match self.mode {
            ProjectionMode::Pooled => &self.bases[0],
            ProjectionMode::PerVariate => &self.bases[d],
        }
    }

    /// Writes the versioned JSON basis file.
    pub fn to_json(&self) -> Result<String> {
        let file = BasisFile {
            format: BASIS_FORMAT.to_string(),
            version: BASIS_VERSION,
            mode: self.mode,
            horizon: self.horizon(),
            bases: self
                .bases
                .iter()
                .map(|b| BasisRecord {
                    standardized: b.standardized,
                    means: b.label_stats.means.iter().map(|x| x.as_f64()).collect(),
                    stds: b.label_stats.stds.iter().map(|x| x.as_f64()).collect(),
                    singular_values: b.singular_values.iter().map(|x| x.as_f64()).collect(),
                    p_star: b.p_star.as_slice().iter().map(|x| x.as_f64()).collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: BasisFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if file.format != BASIS_FORMAT {
            return Err(Error::Format(format!("not a basis file (format `{}`)", file.format)));
        }
        if file.version != BASIS_VERSION {
            return Err(Error::Format(format!(
                "unsupported basis file version {} (expected {BASIS_VERSION})",
                file.version
            )));
        }
        let t = file.horizon;
        let conv = |v: &[f64]| -> Vec<S> { v.iter().map(|&x| S::lit(x)).collect() };
        let bases = file
            .bases
            .iter()
            .map(|r| {
                let stats = ColumnStats::new(conv(&r.means), conv(&r.stds))?;
                let p = Matrix::from_vec(t, t, conv(&r.p_star))?;
                ProjectionBasis::from_parts(p, conv(&r.singular_values), stats, r.standardized)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(file.mode, bases)
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

    /// SHA-256 of the serialized basis, used to tie checkpoints to a basis.
    pub fn fingerprint(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_json()?.as_bytes())))
    }
}

const BASIS_FORMAT: &str = "decorr-basis";
const BASIS_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct BasisFile {
    format: String,
    version: u32,
    mode: ProjectionMode,
    horizon: usize,
    bases: Vec<BasisRecord>,
}

#[derive(Serialize, Deserialize)]
struct BasisRecord {
    standardized: bool,
    means: Vec<f64>,
    stds: Vec<f64>,
    singular_values: Vec<f64>,
    /// Row-major `horizon x horizon`.
    p_star: Vec<f64>,
}

pub fn transform<S: Scalar>(basis: &ProjectionBasis<S>, seq: &Matrix<S>, k: usize) -> Result<ComponentMatrix<S>> {
    basis.check_width(seq)?;
    let z = seq.matmul(&basis.leading(k)?)?;
    Ok(ComponentMatrix {
        z,
        k,
        source_horizon: basis.horizon(),
    })
}

/// `z * P*[:, ..k]^T`; exact inverse of [`transform`] only when `k == T`.
pub fn inverse_transform<S: Scalar>(basis: &ProjectionBasis<S>, comps: &ComponentMatrix<S>) -> Result<Matrix<S>> {
    if comps.source_horizon != basis.horizon() || comps.z.cols() != comps.k {
        return Err(Error::dim(format!(
            "components ({} of horizon {}) do not match basis horizon {}",
            comps.z.cols(),
            comps.source_horizon,
            basis.horizon()
        )));
    }
    comps.z.matmul_t(&basis.leading(comps.k)?)
}

/// Number of retained components, `round(gamma * T)` clamped to `[1, T]`.
pub fn truncation_k(gamma: f64, horizon: usize) -> Result<usize> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::config(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    if horizon == 0 {
        return Err(Error::config("horizon must be positive"));
    }
    // f64::round rounds half away from zero
    let k = (gamma * horizon as f64).round() as usize;
    Ok(k.clamp(1, horizon))
}

/// Largest normalized inner product between distinct component columns.
pub fn decorrelation_report<S: Scalar>(comps: &ComponentMatrix<S>) -> Result<S> {
    let k = comps.z.cols();
    if k < 2 {
        return Err(Error::dim(format!(
            "decorrelation needs at least 2 components, got {k}"
        )));
    }
    let cols: Vec<Vec<S>> = (0..k).map(|j| comps.z.col(j)).collect();
    let norms: Vec<S> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    let max_norm = norms.iter().fold(S::zero(), |a, &b| a.max(b));
    let eps = S::epsilon() * max_norm * max_norm + S::min_positive_value();
    let mut worst = S::zero();
    for p in 0..k {
        for q in (p + 1)..k {
            let r = dot(&cols[p], &cols[q]).abs() / (norms[p] * norms[q] + eps);
            worst = worst.max(r);
        }
    }
    Ok(worst)
}
