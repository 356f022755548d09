//! Dataset representation, CSV ingestion, unit-cube normalization,
//! synthetic generators, and the biasing schemes used to manufacture
//! covariate shift.

mod bias;
mod csv;
mod synth;

pub use bias::{bias_norm, bias_single_feature, bias_sugiyama, BiasedSplit};
pub use csv::{
    fmt_csv_value, load_csv, load_target_csv, parse_labeled_csv, parse_target_csv,
    save_labeled_csv, save_target_csv, write_labeled_csv, write_target_csv,
};
pub use synth::{
    gen_ringnorm, gen_sigmoid_synthetic, gen_sigmoid_target, gen_twonorm, sigmoid_conditional,
};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A labeled training set: `N` feature rows with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: DMatrix<f64>,
    labels: Vec<u8>,
}

impl LabeledDataset {
    pub fn new(features: DMatrix<f64>, labels: Vec<u8>) -> Result<Self> {
        if features.nrows() == 0 || features.ncols() == 0 {
            return Err(Error::Schema(
                "dataset needs at least one row and one feature".into(),
            ));
        }
        if labels.len() != features.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} rows",
                labels.len(),
                features.nrows()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| y > 1) {
            return Err(Error::Schema(format!("label {bad} is not 0/1")));
        }
        Ok(Self { features, labels })
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Labels as a float vector, for linear algebra.
    pub fn label_vector(&self) -> nalgebra::DVector<f64> {
        nalgebra::DVector::from_iterator(self.labels.len(), self.labels.iter().map(|&y| y as f64))
    }

    /// Copy of row `i` as a contiguous slice-backed vector.
    pub fn row(&self, i: usize) -> Vec<f64> {
        self.features.row(i).iter().copied().collect()
    }

    /// New dataset keeping only the given feature columns, in the given order.
    pub fn select_features(&self, columns: &[usize]) -> Result<Self> {
        let sliced = select_columns(&self.features, columns)?;
        LabeledDataset::new(sliced, self.labels.clone())
    }
}

/// An unlabeled sample from the target distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSample {
    features: DMatrix<f64>,
}

impl TargetSample {
    pub fn new(features: DMatrix<f64>) -> Result<Self> {
        if features.nrows() == 0 || features.ncols() == 0 {
            return Err(Error::Schema(
                "target sample needs at least one row and one feature".into(),
            ));
        }
        Ok(Self { features })
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.features.row(i).iter().copied().collect()
    }

    pub fn select_features(&self, columns: &[usize]) -> Result<Self> {
        TargetSample::new(select_columns(&self.features, columns)?)
    }
}

fn select_columns(m: &DMatrix<f64>, columns: &[usize]) -> Result<DMatrix<f64>> {
    if columns.is_empty() {
        return Err(Error::InvalidParam("empty feature selection".into()));
    }
    for &c in columns {
        if c >= m.ncols() {
            return Err(Error::InvalidParam(format!(
                "feature index {c} out of range for {} features",
                m.ncols()
            )));
        }
    }
    Ok(DMatrix::from_fn(m.nrows(), columns.len(), |i, j| {
        m[(i, columns[j])]
    }))
}

/// Per-feature affine map onto `[0, 1]`, kept for reuse on later data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl NormalizationParams {
    fn from_columns(m: &[&DMatrix<f64>]) -> Self {
        let n = m[0].ncols();
        let mut min = vec![f64::INFINITY; n];
        let mut max = vec![f64::NEG_INFINITY; n];
        for mat in m {
            for k in 0..n {
                for i in 0..mat.nrows() {
                    let v = mat[(i, k)];
                    if v < min[k] {
                        min[k] = v;
                    }
                    if v > max[k] {
                        max[k] = v;
                    }
                }
            }
        }
        NormalizationParams { min, max }
    }

    /// Map every value by `(v - min) / (max - min)`; constant features map to 0.
    pub fn apply(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if m.ncols() != self.min.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} features, params cover {}",
                m.ncols(),
                self.min.len()
            )));
        }
        Ok(DMatrix::from_fn(m.nrows(), m.ncols(), |i, k| {
            let span = self.max[k] - self.min[k];
            if span > 0.0 {
                (m[(i, k)] - self.min[k]) / span
            } else {
                0.0
            }
        }))
    }
}

/// Rescale train and target into the unit cube using per-feature min/max
/// computed over the union of both samples.
pub fn normalize_unit_cube(
    train: &LabeledDataset,
    target: &TargetSample,
) -> Result<(LabeledDataset, TargetSample, NormalizationParams)> {
    if train.n_features() != target.n_features() {
        return Err(Error::DimensionMismatch(format!(
            "train has {} features, target has {}",
            train.n_features(),
            target.n_features()
        )));
    }
    let params = NormalizationParams::from_columns(&[train.features(), target.features()]);
    let train_norm = LabeledDataset::new(params.apply(train.features())?, train.labels.clone())?;
    let target_norm = TargetSample::new(params.apply(target.features())?)?;
    Ok((train_norm, target_norm, params))
}

/// Rescale a single dataset into the unit cube over its own rows. Used to
/// preprocess a source set before a biasing scheme splits it.
pub fn normalize_dataset(source: &LabeledDataset) -> Result<(LabeledDataset, NormalizationParams)> {
    let params = NormalizationParams::from_columns(&[source.features()]);
    let normalized = LabeledDataset::new(params.apply(source.features())?, source.labels.clone())?;
    Ok((normalized, params))
}

/// Which statistic a biasing scheme skews.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasScheme {
    /// Rejection sampling into the target set with probability `min(1, 4 x_c^2)`.
    Sugiyama,
    /// 4:1 selection weights above/below the median of one feature.
    SingleFeature,
    /// 4:1 selection weights above/below the median feature-vector norm.
    Norm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasDirection {
    Up,
    Down,
}

/// Parameters for one biasing trial.
#[derive(Debug, Clone)]
pub struct BiasSpec {
    pub scheme: BiasScheme,
    /// Feature index used by `Sugiyama` and `SingleFeature`; `None` draws one
    /// at random from the seed.
    pub feature: Option<usize>,
    /// Used by `SingleFeature` and `Norm`.
    pub direction: BiasDirection,
    pub train_size: usize,
    /// Target-set size. Required for `Sugiyama`; for the weighted schemes
    /// `None` keeps every remaining point.
    pub test_size: Option<usize>,
    pub seed: u64,
}
