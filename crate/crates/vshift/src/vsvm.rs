//! Closed-form kernel estimator of the conditional label probability
//! under a V-coupled L2 loss.
//!
//! The model is `f(x) = A^T k(x) + c` with `k(x)_i = K(x_i, x)`. Writing
//! `K` for the training Gram matrix, the loss
//!
//! ```text
//! (1/N^2) [ (KA + c1 - Y)^T V (KA + c1 - Y) + gamma * A^T K A ]
//! ```
//!
//! is quadratic in `(A, c)` and has the closed-form minimizer
//!
//! ```text
//! A_b = (VK + gamma I)^{-1} V Y
//! A_c = (VK + gamma I)^{-1} V 1
//! c   = 1^T V (K A_b - Y) / 1^T V (K A_c - 1)
//! A   = A_b - c A_c
//! ```
//!
//! With `V = I` this reduces to classical L2-regularized kernel
//! regression. Systems are solved by pivoted LU, never by explicit
//! inversion.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::{LabeledDataset, TargetSample};
use crate::error::{Error, Result};
use crate::vmatrix::VMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    /// `exp(-||x - x'||^2 / (2 h^2))`
    Gaussian,
    /// `exp(-||x - x'|| / h)`: the Gaussian with the squared distance
    /// replaced by the distance itself.
    SqrtGaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub family: KernelFamily,
    pub width: f64,
}

impl KernelConfig {
    pub fn new(family: KernelFamily, width: f64) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::InvalidParam(format!("kernel width {width} must be positive")));
        }
        Ok(Self { family, width })
    }
}

pub fn kernel_eval(config: KernelConfig, x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "kernel arguments must share dimension");
    let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    match config.family {
        KernelFamily::Gaussian => (-sq / (2.0 * config.width * config.width)).exp(),
        KernelFamily::SqrtGaussian => (-sq.sqrt() / config.width).exp(),
    }
}

/// Gram matrix `K_ij = K(x_i, x_j)` over the rows of `features`.
pub fn gram_matrix(config: KernelConfig, features: &DMatrix<f64>) -> DMatrix<f64> {
    let n = features.nrows();
    let dim = features.ncols();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let sq: f64 = (0..dim)
                .map(|d| {
                    let diff = features[(i, d)] - features[(j, d)];
                    diff * diff
                })
                .sum();
            let v = match config.family {
                KernelFamily::Gaussian => (-sq / (2.0 * config.width * config.width)).exp(),
                KernelFamily::SqrtGaussian => (-sq.sqrt() / config.width).exp(),
            };
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// Fitted kernel model. Serializes to JSON and reproduces its fitted
/// values exactly from the stored fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VsvmModel {
    pub kernel: KernelConfig,
    pub gamma: f64,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub train_features: Vec<Vec<f64>>,
    /// Set when the intercept system was degenerate and `c` fell back to
    /// the label mean.
    #[serde(default, skip_serializing_if = "is_false")]
    pub degenerate_intercept: bool,
}

impl VsvmModel {
    pub fn n_train(&self) -> usize {
        self.train_features.len()
    }

    pub fn n_features(&self) -> usize {
        self.train_features.first().map_or(0, Vec::len)
    }

    /// Unclamped `A^T k(x) + c`.
    pub fn predict_raw(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch(format!(
                "point has {} features, model trained on {}",
                x.len(),
                self.n_features()
            )));
        }
        let mut acc = self.intercept;
        for (a, xi) in self.coefficients.iter().zip(&self.train_features) {
            acc += a * kernel_eval(self.kernel, xi, x);
        }
        Ok(acc)
    }

    /// Conditional probability estimate, clamped to `[0, 1]`.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        Ok(self.predict_raw(x)?.clamp(0.0, 1.0))
    }

    /// Hard label: 1 iff the raw (unclamped) value is at least 1/2.
    pub fn predict_label(&self, x: &[f64]) -> Result<u8> {
        Ok(u8::from(self.predict_raw(x)? >= 0.5))
    }

    pub fn predict_proba_batch(&self, points: &TargetSample) -> Result<Vec<f64>> {
        (0..points.n_rows())
            .map(|i| self.predict_proba(&points.row(i)))
            .collect()
    }

    pub fn predict_label_batch(&self, points: &TargetSample) -> Result<Vec<u8>> {
        (0..points.n_rows())
            .map(|i| self.predict_label(&points.row(i)))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: VsvmModel = serde_json::from_str(text)?;
        if model.coefficients.len() != model.train_features.len() {
            return Err(Error::Schema(format!(
                "{} coefficients for {} training rows",
                model.coefficients.len(),
                model.train_features.len()
            )));
        }
        let dim = model.n_features();
        if dim == 0 || model.train_features.iter().any(|r| r.len() != dim) {
            return Err(Error::Schema("ragged or empty train_features".into()));
        }
        if !(model.kernel.width > 0.0) {
            return Err(Error::Schema("kernel width must be positive".into()));
        }
        Ok(model)
    }
}

const INTERCEPT_DENOM_FLOOR: f64 = 1e-12;

/// Fit the closed form. `v` must be `N x N` for the `N` training rows.
pub fn fit(
    train: &LabeledDataset,
    v: &VMatrix,
    kernel: KernelConfig,
    gamma: f64,
) -> Result<VsvmModel> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParam(format!("gamma {gamma} must be positive")));
    }
    let n = train.n_rows();
    if v.size() != n {
        return Err(Error::DimensionMismatch(format!(
            "V is {}x{} but there are {n} training rows",
            v.size(),
            v.size()
        )));
    }

    let k = gram_matrix(kernel, train.features());
    let y = train.label_vector();
    let ones = DVector::from_element(n, 1.0);

    let mut system = v.entries() * &k;
    for i in 0..n {
        system[(i, i)] += gamma;
    }
    let lu = system.lu();
    let a_b = lu
        .solve(&(v.entries() * &y))
        .ok_or_else(|| solver_error(&lu))?;
    let a_c = lu
        .solve(&(v.entries() * &ones))
        .ok_or_else(|| solver_error(&lu))?;

    let num = (v.entries() * (&k * &a_b - &y)).sum();
    let den = (v.entries() * (&k * &a_c - &ones)).sum();

    let (c, degenerate) = if den.abs() < INTERCEPT_DENOM_FLOOR {
        (y.mean(), true)
    } else {
        (num / den, false)
    };
    let a = &a_b - &a_c * c;

    Ok(VsvmModel {
        kernel,
        gamma,
        coefficients: a.iter().copied().collect(),
        intercept: c,
        train_features: (0..n).map(|i| train.row(i)).collect(),
        degenerate_intercept: degenerate,
    })
}

fn solver_error(lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>) -> Error {
    // Rough conditioning report from the pivot magnitudes.
    let u = lu.u();
    let mut max_p = 0.0f64;
    let mut min_p = f64::INFINITY;
    for i in 0..u.nrows().min(u.ncols()) {
        let p = u[(i, i)].abs();
        max_p = max_p.max(p);
        min_p = min_p.min(p);
    }
    let cond = if min_p > 0.0 { max_p / min_p } else { f64::INFINITY };
    Error::Solver(format!(
        "singular system (pivot-ratio condition estimate {cond:.3e})"
    ))
}

/// The fitted loss, `(1/N^2) [ (KA + c1 - Y)^T V (KA + c1 - Y) + gamma A^T K A ]`.
/// Exposed so tests and diagnostics can score candidate `(A, c)` pairs.
pub fn objective(
    k: &DMatrix<f64>,
    v: &VMatrix,
    y: &DVector<f64>,
    coefficients: &DVector<f64>,
    intercept: f64,
    gamma: f64,
) -> f64 {
    let n = y.len() as f64;
    let resid = k * coefficients + DVector::from_element(y.len(), intercept) - y;
    let coupling = (v.entries() * &resid).dot(&resid);
    let penalty = gamma * (k * coefficients).dot(coefficients);
    (coupling + penalty) / (n * n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;

    fn sqrt_kernel() -> KernelConfig {
        KernelConfig::new(KernelFamily::SqrtGaussian, 1.0).unwrap()
    }

    #[test]
    fn kernel_values() {
        let g = KernelConfig::new(KernelFamily::Gaussian, 1.0).unwrap();
        let s = sqrt_kernel();
        assert_eq!(kernel_eval(g, &[0.3, 0.7], &[0.3, 0.7]), 1.0);
        assert_eq!(kernel_eval(s, &[1.0], &[1.0]), 1.0);
        assert_relative_eq!(kernel_eval(g, &[0.0], &[1.0]), (-0.5f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(kernel_eval(s, &[0.0], &[1.0]), (-1.0f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn kernel_width_must_be_positive() {
        assert!(KernelConfig::new(KernelFamily::Gaussian, 0.0).is_err());
        assert!(KernelConfig::new(KernelFamily::Gaussian, -1.0).is_err());
    }

    #[test]
    fn all_ones_labels_force_constant_one() {
        let train = LabeledDataset::new(dmatrix![0.0; 0.4; 0.9], vec![1, 1, 1]).unwrap();
        let v = VMatrix::identity(3).unwrap();
        let model = fit(&train, &v, sqrt_kernel(), 0.1).unwrap();
        assert_relative_eq!(model.intercept, 1.0, epsilon = 1e-10);
        for a in &model.coefficients {
            assert!(a.abs() < 1e-10);
        }
        for x in [-2.0, 0.0, 0.3, 5.0] {
            assert_relative_eq!(model.predict_proba(&[x]).unwrap(), 1.0, epsilon = 1e-9);
            assert_eq!(model.predict_label(&[x]).unwrap(), 1);
        }
    }

    #[test]
    fn proba_clamps_label_uses_raw() {
        let model = VsvmModel {
            kernel: sqrt_kernel(),
            gamma: 0.1,
            coefficients: vec![0.0],
            intercept: 1.3,
            train_features: vec![vec![0.0]],
            degenerate_intercept: false,
        };
        assert_eq!(model.predict_proba(&[0.0]).unwrap(), 1.0);
        assert_eq!(model.predict_label(&[0.0]).unwrap(), 1);

        let model = VsvmModel { intercept: -0.2, ..model };
        assert_eq!(model.predict_proba(&[0.0]).unwrap(), 0.0);
        assert_eq!(model.predict_label(&[0.0]).unwrap(), 0);

        let model = VsvmModel { intercept: 0.5, ..model };
        assert_eq!(model.predict_label(&[0.0]).unwrap(), 1);
        let model = VsvmModel { intercept: 0.49, ..model };
        assert_eq!(model.predict_label(&[0.0]).unwrap(), 0);
    }

    #[test]
    fn predict_dimension_mismatch() {
        let train = LabeledDataset::new(dmatrix![0.0, 1.0; 1.0, 0.0], vec![0, 1]).unwrap();
        let v = VMatrix::identity(2).unwrap();
        let model = fit(&train, &v, sqrt_kernel(), 0.1).unwrap();
        assert!(model.predict_raw(&[0.5]).is_err());
    }

    #[test]
    fn gamma_must_be_positive() {
        let train = LabeledDataset::new(dmatrix![0.0; 1.0], vec![0, 1]).unwrap();
        let v = VMatrix::identity(2).unwrap();
        assert!(fit(&train, &v, sqrt_kernel(), 0.0).is_err());
    }

    #[test]
    fn v_size_must_match() {
        let train = LabeledDataset::new(dmatrix![0.0; 1.0], vec![0, 1]).unwrap();
        let v = VMatrix::identity(3).unwrap();
        assert!(fit(&train, &v, sqrt_kernel(), 0.1).is_err());
    }

    #[test]
    fn permutation_equivariance() {
        let train =
            LabeledDataset::new(dmatrix![0.1; 0.7; 0.4; 0.95], vec![1, 0, 1, 0]).unwrap();
        let t = TargetSample::new(dmatrix![0.2; 0.5; 0.8; 0.05; 0.6]).unwrap();
        let v = VMatrix::empirical(train.features(), &t).unwrap();
        let model = fit(&train, &v, sqrt_kernel(), 0.1).unwrap();

        // Reverse the row order.
        let perm: Vec<usize> = (0..4).rev().collect();
        let train_p = LabeledDataset::new(
            dmatrix![0.95; 0.4; 0.7; 0.1],
            perm.iter().map(|&i| train.labels()[i]).collect(),
        )
        .unwrap();
        let v_p = VMatrix::empirical(train_p.features(), &t).unwrap();
        let model_p = fit(&train_p, &v_p, sqrt_kernel(), 0.1).unwrap();

        assert_relative_eq!(model.intercept, model_p.intercept, epsilon = 1e-10);
        for (i, &pi) in perm.iter().enumerate() {
            assert_relative_eq!(
                model.coefficients[pi],
                model_p.coefficients[i],
                epsilon = 1e-10
            );
        }
        for x in [-0.3, 0.2, 0.55, 1.1] {
            assert_relative_eq!(
                model.predict_raw(&[x]).unwrap(),
                model_p.predict_raw(&[x]).unwrap(),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn json_roundtrip_is_exact() {
        let train = LabeledDataset::new(dmatrix![0.0; 1.0; 0.3], vec![1, 0, 1]).unwrap();
        let v = VMatrix::identity(3).unwrap();
        let model = fit(&train, &v, sqrt_kernel(), 0.1).unwrap();
        let json = model.to_json().unwrap();
        let back = VsvmModel::from_json(&json).unwrap();
        assert_eq!(model, back);
        assert_eq!(back.to_json().unwrap(), json);
        assert_eq!(
            model.predict_raw(&[0.37]).unwrap().to_bits(),
            back.predict_raw(&[0.37]).unwrap().to_bits()
        );
    }

    #[test]
    fn from_json_rejects_ragged_model() {
        let bad = r#"{"kernel":{"family":"gaussian","width":1.0},"gamma":0.1,
                      "coefficients":[0.1,0.2],"intercept":0.0,
                      "train_features":[[0.0],[1.0,2.0]]}"#;
        assert!(VsvmModel::from_json(bad).is_err());
    }
}
