//! Seeded synthetic dataset generators.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::{LabeledDataset, TargetSample};
use crate::error::{Error, Result};

/// The true conditional `p(y = 1 | x) = 1 / (1 + e^{5x})` of the
/// 1-d synthetic problem.
pub fn sigmoid_conditional(x: f64) -> f64 {
    1.0 / (1.0 + (5.0 * x).exp())
}

/// 1-d shifted-domain problem: training inputs are Uniform[-1, 1] with
/// labels drawn from [`sigmoid_conditional`]; target inputs come from the
/// mixture `0.3 * Uniform[0, 1] + 0.7 * Uniform[-1, 0]`.
///
/// Also hands back the true conditional for error metrics. Deterministic
/// in `(n_train, m_target, seed)`.
pub fn gen_sigmoid_synthetic(
    n_train: usize,
    m_target: usize,
    seed: u64,
) -> Result<(LabeledDataset, TargetSample, fn(f64) -> f64)> {
    if n_train == 0 || m_target == 0 {
        return Err(Error::InvalidParam("sizes must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::with_capacity(n_train);
    let mut ys = Vec::with_capacity(n_train);
    for _ in 0..n_train {
        let x = rng.random::<f64>() * 2.0 - 1.0;
        let y = u8::from(rng.random::<f64>() < sigmoid_conditional(x));
        xs.push(x);
        ys.push(y);
    }
    let mut ts = Vec::with_capacity(m_target);
    for _ in 0..m_target {
        let t = if rng.random::<f64>() < 0.3 {
            rng.random::<f64>()
        } else {
            rng.random::<f64>() - 1.0
        };
        ts.push(t);
    }
    let train = LabeledDataset::new(DMatrix::from_column_slice(n_train, 1, &xs), ys)?;
    let target = TargetSample::new(DMatrix::from_column_slice(m_target, 1, &ts))?;
    Ok((train, target, sigmoid_conditional))
}

/// An independent draw from the synthetic target mixture alone.
pub fn gen_sigmoid_target(m_target: usize, seed: u64) -> Result<TargetSample> {
    if m_target == 0 {
        return Err(Error::InvalidParam("size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ts = Vec::with_capacity(m_target);
    for _ in 0..m_target {
        let t = if rng.random::<f64>() < 0.3 {
            rng.random::<f64>()
        } else {
            rng.random::<f64>() - 1.0
        };
        ts.push(t);
    }
    TargetSample::new(DMatrix::from_column_slice(m_target, 1, &ts))
}

const BREIMAN_DIM: usize = 20;

/// Two 20-d Gaussians: class 0 is `N(+a*1, I)`, class 1 is `N(-a*1, I)`
/// with `a = 2/sqrt(20)`. Classes balanced, rows interleaved.
pub fn gen_twonorm(n: usize, seed: u64) -> Result<LabeledDataset> {
    let a = 2.0 / (BREIMAN_DIM as f64).sqrt();
    gen_gaussian_pair(n, seed, move |rng, label, out| {
        let shift = if label == 0 { a } else { -a };
        for v in out.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v = z + shift;
        }
    })
}

/// 20-d ring problem: class 0 is `N(0, 4I)`, class 1 is `N(a*1, I)` with
/// `a = 2/sqrt(20)`. Classes balanced, rows interleaved.
pub fn gen_ringnorm(n: usize, seed: u64) -> Result<LabeledDataset> {
    let a = 2.0 / (BREIMAN_DIM as f64).sqrt();
    gen_gaussian_pair(n, seed, move |rng, label, out| {
        for v in out.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v = if label == 0 { 2.0 * z } else { z + a };
        }
    })
}

fn gen_gaussian_pair(
    n: usize,
    seed: u64,
    mut fill_row: impl FnMut(&mut ChaCha8Rng, u8, &mut [f64]),
) -> Result<LabeledDataset> {
    if n == 0 {
        return Err(Error::InvalidParam("size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = DMatrix::zeros(n, BREIMAN_DIM);
    let mut labels = Vec::with_capacity(n);
    let mut row = [0.0; BREIMAN_DIM];
    for i in 0..n {
        let label = (i % 2) as u8;
        fill_row(&mut rng, label, &mut row);
        for (k, &v) in row.iter().enumerate() {
            features[(i, k)] = v;
        }
        labels.push(label);
    }
    LabeledDataset::new(features, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn conditional_at_zero_is_half() {
        assert_eq!(sigmoid_conditional(0.0), 0.5);
    }

    #[test]
    fn conditional_at_minus_one() {
        // 1 / (1 + e^{-5})
        assert_relative_eq!(sigmoid_conditional(-1.0), 0.9933071490757153, epsilon = 1e-12);
    }

    #[test]
    fn sigmoid_generator_is_deterministic() {
        let (a_train, a_target, _) = gen_sigmoid_synthetic(64, 128, 7).unwrap();
        let (b_train, b_target, _) = gen_sigmoid_synthetic(64, 128, 7).unwrap();
        assert_eq!(a_train, b_train);
        assert_eq!(a_target, b_target);
        let (c_train, _, _) = gen_sigmoid_synthetic(64, 128, 8).unwrap();
        assert_ne!(a_train, c_train);
    }

    #[test]
    fn sigmoid_target_mixture_mass_below_zero() {
        let m = 4000;
        let (_, target, _) = gen_sigmoid_synthetic(4, m, 99).unwrap();
        let below = target.features().iter().filter(|&&t| t < 0.0).count() as f64;
        let frac = below / m as f64;
        let band = 3.0 * (0.21f64 / m as f64).sqrt();
        assert!((frac - 0.7).abs() <= band, "fraction {frac} outside band {band}");
    }

    #[test]
    fn twonorm_class_means() {
        let n = 1000;
        let a = 2.0 / 20f64.sqrt();
        let ds = gen_twonorm(n, 11).unwrap();
        assert_eq!(ds.n_features(), 20);
        let rows0: Vec<usize> = (0..n).filter(|i| ds.labels()[*i] == 0).collect();
        assert_eq!(rows0.len(), 500);
        let tol = 3.0 / (rows0.len() as f64).sqrt();
        for k in 0..20 {
            let mean: f64 =
                rows0.iter().map(|&i| ds.features()[(i, k)]).sum::<f64>() / rows0.len() as f64;
            assert!((mean - a).abs() <= tol, "coord {k}: mean {mean} vs {a}");
        }
    }

    #[test]
    fn ringnorm_class_zero_variance() {
        let n = 1000;
        let ds = gen_ringnorm(n, 13).unwrap();
        assert_eq!(ds.n_features(), 20);
        let rows0: Vec<usize> = (0..n).filter(|i| ds.labels()[*i] == 0).collect();
        for k in 0..20 {
            let vals: Vec<f64> = rows0.iter().map(|&i| ds.features()[(i, k)]).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var =
                vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
            assert!((var - 4.0).abs() <= 0.8, "coord {k}: variance {var}");
        }
    }

    #[test]
    fn breiman_generators_are_deterministic() {
        assert_eq!(gen_twonorm(50, 3).unwrap(), gen_twonorm(50, 3).unwrap());
        assert_eq!(gen_ringnorm(50, 3).unwrap(), gen_ringnorm(50, 3).unwrap());
    }
}
