//! Covariate-shift injection: split a labeled source set into a biased
//! train set and a target sample whose input distributions differ.
//!
//! All schemes sample without replacement; train and target never share a
//! source row. Target labels are stripped from the [`TargetSample`] but
//! kept on the side so a harness can score held-out predictions.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{BiasDirection, BiasScheme, BiasSpec, LabeledDataset, TargetSample};
use crate::error::{Error, Result};

/// Result of one biasing trial.
#[derive(Debug, Clone)]
pub struct BiasedSplit {
    pub train: LabeledDataset,
    pub target: TargetSample,
    /// Labels of the target rows, aligned with `target`, for evaluation only.
    pub target_labels: Vec<u8>,
    /// Feature index the scheme biased on, when one was used.
    pub feature: Option<usize>,
    pub direction: Option<BiasDirection>,
}

/// Rejection-sample the target set: draw a random remaining source row and
/// accept it with probability `min(1, 4 x_c^2)`, removing it from the pool
/// either way, until `test_size` rows are accepted. The train set is then a
/// uniform draw from whatever remains. Expects features in `[0, 1]`.
pub fn bias_sugiyama(source: &LabeledDataset, spec: &BiasSpec) -> Result<BiasedSplit> {
    if spec.scheme != BiasScheme::Sugiyama {
        return Err(Error::InvalidParam("spec scheme is not sugiyama".into()));
    }
    let test_size = spec
        .test_size
        .ok_or_else(|| Error::InvalidParam("sugiyama biasing requires a test size".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let feature = pick_feature(spec.feature, source.n_features(), &mut rng)?;

    let mut pool: Vec<usize> = (0..source.n_rows()).collect();
    let mut accepted = Vec::with_capacity(test_size);
    while accepted.len() < test_size {
        if pool.is_empty() {
            return Err(Error::InsufficientData(format!(
                "pool exhausted after {} of {test_size} target points",
                accepted.len()
            )));
        }
        let at = rng.random_range(0..pool.len());
        let row = pool.swap_remove(at);
        let x = source.features()[(row, feature)];
        let p = (4.0 * x * x).min(1.0);
        if rng.random::<f64>() < p {
            accepted.push(row);
        }
    }
    if pool.len() < spec.train_size {
        return Err(Error::InsufficientData(format!(
            "{} rows left after target draw, need {} for training",
            pool.len(),
            spec.train_size
        )));
    }
    let train_rows = draw_uniform(&mut pool, spec.train_size, &mut rng);

    Ok(BiasedSplit {
        train: subset_labeled(source, &train_rows)?,
        target: subset_target(source, &accepted)?,
        target_labels: accepted.iter().map(|&i| source.labels()[i]).collect(),
        feature: Some(feature),
        direction: None,
    })
}

/// Median-split selection bias on one feature: rows above the median are
/// 4x as likely (direction up) or 4x less likely (down) to enter the train
/// set. The target sample is drawn uniformly from the remainder.
pub fn bias_single_feature(source: &LabeledDataset, spec: &BiasSpec) -> Result<BiasedSplit> {
    if spec.scheme != BiasScheme::SingleFeature {
        return Err(Error::InvalidParam("spec scheme is not single_feature".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let feature = pick_feature(spec.feature, source.n_features(), &mut rng)?;
    let stat: Vec<f64> = (0..source.n_rows())
        .map(|i| source.features()[(i, feature)])
        .collect();
    bias_by_statistic(source, spec, stat, Some(feature), &mut rng)
}

/// Same selection bias as [`bias_single_feature`], keyed on the Euclidean
/// norm of the whole feature vector.
pub fn bias_norm(source: &LabeledDataset, spec: &BiasSpec) -> Result<BiasedSplit> {
    if spec.scheme != BiasScheme::Norm {
        return Err(Error::InvalidParam("spec scheme is not norm".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let stat: Vec<f64> = (0..source.n_rows())
        .map(|i| source.features().row(i).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    bias_by_statistic(source, spec, stat, None, &mut rng)
}

fn bias_by_statistic(
    source: &LabeledDataset,
    spec: &BiasSpec,
    stat: Vec<f64>,
    feature: Option<usize>,
    rng: &mut ChaCha8Rng,
) -> Result<BiasedSplit> {
    let n = source.n_rows();
    if spec.train_size == 0 || spec.train_size >= n {
        return Err(Error::InsufficientData(format!(
            "train size {} against {} source rows",
            spec.train_size, n
        )));
    }
    let med = median(&stat);
    let above_weight = match spec.direction {
        BiasDirection::Up => 4.0,
        BiasDirection::Down => 1.0,
    };
    let below_weight = match spec.direction {
        BiasDirection::Up => 1.0,
        BiasDirection::Down => 4.0,
    };
    let weights: Vec<f64> = stat
        .iter()
        .map(|&s| if s > med { above_weight } else { below_weight })
        .collect();

    let mut pool: Vec<usize> = (0..n).collect();
    let mut train_rows = Vec::with_capacity(spec.train_size);
    for _ in 0..spec.train_size {
        let total: f64 = pool.iter().map(|&i| weights[i]).sum();
        let mut r = rng.random::<f64>() * total;
        let mut chosen = pool.len() - 1;
        for (pos, &i) in pool.iter().enumerate() {
            r -= weights[i];
            if r < 0.0 {
                chosen = pos;
                break;
            }
        }
        train_rows.push(pool.remove(chosen));
    }

    let target_rows = match spec.test_size {
        None => pool,
        Some(m) => {
            if m > pool.len() {
                return Err(Error::InsufficientData(format!(
                    "{} rows left for target, {m} requested",
                    pool.len()
                )));
            }
            draw_uniform(&mut pool, m, rng)
        }
    };
    if target_rows.is_empty() {
        return Err(Error::InsufficientData("no rows left for the target sample".into()));
    }

    Ok(BiasedSplit {
        train: subset_labeled(source, &train_rows)?,
        target: subset_target(source, &target_rows)?,
        target_labels: target_rows.iter().map(|&i| source.labels()[i]).collect(),
        feature,
        direction: Some(spec.direction),
    })
}

fn pick_feature(fixed: Option<usize>, n_features: usize, rng: &mut ChaCha8Rng) -> Result<usize> {
    match fixed {
        Some(c) if c < n_features => Ok(c),
        Some(c) => Err(Error::InvalidParam(format!(
            "feature index {c} out of range for {n_features} features"
        ))),
        None => Ok(rng.random_range(0..n_features)),
    }
}

fn draw_uniform(pool: &mut Vec<usize>, count: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let at = rng.random_range(0..pool.len());
        out.push(pool.swap_remove(at));
    }
    out
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn subset_labeled(source: &LabeledDataset, rows: &[usize]) -> Result<LabeledDataset> {
    LabeledDataset::new(
        subset_matrix(source.features(), rows),
        rows.iter().map(|&i| source.labels()[i]).collect(),
    )
}

fn subset_target(source: &LabeledDataset, rows: &[usize]) -> Result<TargetSample> {
    TargetSample::new(subset_matrix(source.features(), rows))
}

fn subset_matrix(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), m.ncols(), |i, k| m[(rows[i], k)])
}
