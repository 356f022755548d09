//! Density-ratio importance-weighting baselines.
//!
//! Fits product-form Gaussian KDEs to the training and target samples and
//! reweights each training point by `q(x_i) / p(x_i)`, optionally raised
//! to an exponent `tau` in `[0, 1]`. The weights enter the learner as a
//! diagonal V.

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::{LabeledDataset, TargetSample};
use crate::error::{Error, Result};
use crate::vmatrix::VMatrix;
use crate::vsvm::{self, KernelConfig, VsvmModel};

/// Floor applied to the training density before dividing; keeps weights
/// finite when a training point sits far from all target mass.
pub const DENSITY_FLOOR: f64 = 1e-300;

/// Gaussian kernel density estimate with a single scalar bandwidth.
#[derive(Debug, Clone)]
pub struct KdeModel {
    sample: DMatrix<f64>,
    bandwidth: f64,
}

impl KdeModel {
    pub fn new(sample: DMatrix<f64>, bandwidth: f64) -> Result<Self> {
        if sample.nrows() == 0 {
            return Err(Error::InvalidParam("KDE sample is empty".into()));
        }
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(Error::InvalidParam(format!("bandwidth {bandwidth} must be positive")));
        }
        Ok(Self { sample, bandwidth })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// `(1 / (m (2 pi)^{n/2} h^n)) sum_p exp(-||x - s_p||^2 / (2 h^2))`
    pub fn density(&self, x: &[f64]) -> f64 {
        let dim = self.sample.ncols();
        assert_eq!(x.len(), dim, "KDE query dimension mismatch");
        let h = self.bandwidth;
        let m = self.sample.nrows();
        let mut sum = 0.0;
        for p in 0..m {
            let sq: f64 = (0..dim)
                .map(|k| {
                    let d = x[k] - self.sample[(p, k)];
                    d * d
                })
                .sum();
            sum += (-sq / (2.0 * h * h)).exp();
        }
        let norm = m as f64 * (2.0 * std::f64::consts::PI).powf(dim as f64 / 2.0) * h.powi(dim as i32);
        sum / norm
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    /// `w(x) = q(x) / p(x)`
    Ratio,
    /// `w(x) = (q(x) / p(x))^tau`
    Exponentiated,
}

/// Per-training-point loss multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceWeights {
    pub values: Vec<f64>,
    pub scheme: WeightScheme,
    pub tau: f64,
    /// How many training densities hit [`DENSITY_FLOOR`].
    pub floor_hits: usize,
}

impl ImportanceWeights {
    /// One weight per line, training row order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for v in &self.values {
            writeln!(w, "{}", crate::dataset::fmt_csv_value(*v))?;
        }
        Ok(())
    }
}

/// Estimate densities of train (`p`) and target (`q`) by KDE at bandwidth
/// `h`, then weight each training point by the ratio at that point.
pub fn importance_weights(
    train_features: &DMatrix<f64>,
    target: &TargetSample,
    h: f64,
    scheme: WeightScheme,
    tau: f64,
) -> Result<ImportanceWeights> {
    if train_features.ncols() != target.n_features() {
        return Err(Error::DimensionMismatch(format!(
            "train has {} features, target has {}",
            train_features.ncols(),
            target.n_features()
        )));
    }
    if scheme == WeightScheme::Exponentiated && !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidParam(format!("tau {tau} must be in [0, 1]")));
    }
    let p = KdeModel::new(train_features.clone(), h)?;
    let q = KdeModel::new(target.features().clone(), h)?;

    let mut floor_hits = 0usize;
    let mut values = Vec::with_capacity(train_features.nrows());
    let mut buf = vec![0.0; train_features.ncols()];
    for i in 0..train_features.nrows() {
        for (k, b) in buf.iter_mut().enumerate() {
            *b = train_features[(i, k)];
        }
        let mut p_hat = p.density(&buf);
        if p_hat < DENSITY_FLOOR {
            p_hat = DENSITY_FLOOR;
            floor_hits += 1;
        }
        let ratio = q.density(&buf) / p_hat;
        let w = match scheme {
            WeightScheme::Ratio => ratio,
            WeightScheme::Exponentiated => ratio.powf(tau),
        };
        values.push(w);
    }
    if floor_hits > 0 {
        log::warn!("importance weights: {floor_hits} training densities floored at {DENSITY_FLOOR:e}");
    }
    Ok(ImportanceWeights {
        values,
        scheme,
        tau: if scheme == WeightScheme::Ratio { 1.0 } else { tau },
        floor_hits,
    })
}

/// Fit the kernel learner with the weights as a diagonal V.
pub fn fit_weighted(
    train: &LabeledDataset,
    weights: &ImportanceWeights,
    kernel: KernelConfig,
    gamma: f64,
) -> Result<VsvmModel> {
    if weights.values.len() != train.n_rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} training rows",
            weights.values.len(),
            train.n_rows()
        )));
    }
    let v = VMatrix::diagonal(&weights.values)?;
    vsvm::fit(train, &v, kernel, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_point_density_values() {
        let kde = KdeModel::new(dmatrix![0.0], 1.0).unwrap();
        let inv_sqrt_2pi = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert_relative_eq!(kde.density(&[0.0]), inv_sqrt_2pi, epsilon = 1e-15);
        assert_relative_eq!(
            kde.density(&[1.0]),
            (-0.5f64).exp() * inv_sqrt_2pi,
            epsilon = 1e-15
        );
    }

    #[test]
    fn density_integrates_to_one() {
        let kde = KdeModel::new(dmatrix![-0.4; 0.3; 1.1], 0.7).unwrap();
        let (lo, hi, steps) = (-12.0, 12.0, 24_000);
        let dx = (hi - lo) / steps as f64;
        let mut integral = 0.0;
        for s in 0..=steps {
            let x = lo + s as f64 * dx;
            let w = if s == 0 || s == steps { 0.5 } else { 1.0 };
            integral += w * kde.density(&[x]) * dx;
        }
        assert!((integral - 1.0).abs() < 1e-3, "integral {integral}");
    }

    #[test]
    fn density_positive_and_permutation_invariant() {
        let kde_a = KdeModel::new(dmatrix![0.1, 0.0; 0.9, 0.5; 0.4, 0.7], 2.0).unwrap();
        let kde_b = KdeModel::new(dmatrix![0.4, 0.7; 0.1, 0.0; 0.9, 0.5], 2.0).unwrap();
        for x in [[0.0, 0.0], [0.5, 0.5], [20.0, -3.0]] {
            assert!(kde_a.density(&x) > 0.0);
            assert_relative_eq!(kde_a.density(&x), kde_b.density(&x), epsilon = 1e-15);
        }
    }

    #[test]
    fn identical_samples_give_unit_weights() {
        let x = dmatrix![0.2; 0.5; 0.8];
        let t = TargetSample::new(x.clone()).unwrap();
        let w = importance_weights(&x, &t, 2.0, WeightScheme::Ratio, 1.0).unwrap();
        for v in &w.values {
            assert_relative_eq!(*v, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn tau_zero_gives_unit_weights() {
        let x = dmatrix![0.2; 0.5];
        let t = TargetSample::new(dmatrix![0.9; 0.95; 1.0]).unwrap();
        let w = importance_weights(&x, &t, 1.0, WeightScheme::Exponentiated, 0.0).unwrap();
        assert_eq!(w.values, vec![1.0, 1.0]);
    }

    #[test]
    fn tau_one_equals_ratio_scheme() {
        let x = dmatrix![0.2; 0.5; 0.7];
        let t = TargetSample::new(dmatrix![0.9; 0.3]).unwrap();
        let a = importance_weights(&x, &t, 0.8, WeightScheme::Exponentiated, 1.0).unwrap();
        let b = importance_weights(&x, &t, 0.8, WeightScheme::Ratio, 1.0).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn shifted_single_points_give_gaussian_ratio() {
        let x = dmatrix![0.0];
        let t = TargetSample::new(dmatrix![1.0]).unwrap();
        let w = importance_weights(&x, &t, 1.0, WeightScheme::Ratio, 1.0).unwrap();
        assert_relative_eq!(w.values[0], (-0.5f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn tau_out_of_range_rejected() {
        let x = dmatrix![0.0];
        let t = TargetSample::new(dmatrix![1.0]).unwrap();
        assert!(importance_weights(&x, &t, 1.0, WeightScheme::Exponentiated, 1.5).is_err());
    }

    #[test]
    fn matched_distributions_weights_near_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        for _ in 0..20 {
            let train = DMatrix::from_fn(60, 1, |_, _| rng.random::<f64>());
            let target = TargetSample::new(DMatrix::from_fn(60, 1, |_, _| rng.random::<f64>()))
                .unwrap();
            let w = importance_weights(&train, &target, 0.5, WeightScheme::Ratio, 1.0).unwrap();
            let mut vals = w.values.clone();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let median = vals[vals.len() / 2];
            assert!((0.5..=2.0).contains(&median), "median weight {median}");
        }
    }

    #[test]
    fn unit_weights_match_unweighted_fit() {
        let train = LabeledDataset::new(dmatrix![0.1; 0.5; 0.9; 0.3], vec![1, 0, 0, 1]).unwrap();
        let weights = ImportanceWeights {
            values: vec![1.0; 4],
            scheme: WeightScheme::Ratio,
            tau: 1.0,
            floor_hits: 0,
        };
        let kernel = KernelConfig::new(crate::vsvm::KernelFamily::SqrtGaussian, 1.0).unwrap();
        let weighted = fit_weighted(&train, &weights, kernel, 0.1).unwrap();
        let unweighted =
            vsvm::fit(&train, &VMatrix::identity(4).unwrap(), kernel, 0.1).unwrap();
        assert_eq!(weighted.coefficients, unweighted.coefficients);
        assert_eq!(weighted.intercept, unweighted.intercept);
    }

    #[test]
    fn zero_weight_point_leaves_coupling_term() {
        // Objective with a zero-weight final point equals the objective of
        // the truncated problem evaluated on the same (A, c) restricted to
        // the first rows: its residual row and column vanish from rho^2.
        let train = LabeledDataset::new(dmatrix![0.1; 0.6; 0.9], vec![1, 0, 1]).unwrap();
        let weights = ImportanceWeights {
            values: vec![1.0, 1.0, 0.0],
            scheme: WeightScheme::Ratio,
            tau: 1.0,
            floor_hits: 0,
        };
        let kernel = KernelConfig::new(crate::vsvm::KernelFamily::SqrtGaussian, 1.0).unwrap();
        let model = fit_weighted(&train, &weights, kernel, 0.1).unwrap();

        let k = vsvm::gram_matrix(kernel, train.features());
        let a = nalgebra::DVector::from_vec(model.coefficients.clone());
        let y = train.label_vector();

        let v_full = VMatrix::diagonal(&weights.values).unwrap();
        let resid = &k * &a
            + nalgebra::DVector::from_element(3, model.intercept)
            - &y;
        let coupling_full = (v_full.entries() * &resid).dot(&resid);

        // Drop the zero-weight row/column by hand.
        let coupling_manual: f64 = (0..2)
            .map(|i| resid[i] * resid[i] * weights.values[i])
            .sum();
        assert_relative_eq!(coupling_full, coupling_manual, epsilon = 1e-12);
    }
}
