//! Construction of V-matrices: the pairwise loss-coupling weights
//!
//! ```text
//! V(i, j) = integral of theta(x - x_i) * theta(x - x_j) d mu(x)
//! ```
//!
//! i.e. the mass, under the measure `mu`, of the region dominating both
//! training points componentwise. When `mu` factors across dimensions this
//! reduces to `prod_k [1 - mu_k(max(x_i^k, x_j^k))]`, which gives the
//! analytic uniform and Gaussian forms. Substituting the empirical CDF of
//! an unlabeled target sample `t_1..t_M` gives the estimator
//!
//! ```text
//! V_hat(i, j) = (1/M) * sum_q prod_k 1[t_q^k >= max(x_i^k, x_j^k)]
//! ```
//!
//! which is unbiased for the true target V entrywise, together with an
//! additive per-dimension variant that stays well-conditioned in high
//! dimension. Ties `t = max(...)` count as dominating.
//!
//! Empirical construction accumulates integer counts and divides once, so
//! results are bitwise-deterministic however the loop is scheduled.

use std::io::Write;

use nalgebra::DMatrix;
use statrs::function::erf::erfc;

use crate::dataset::TargetSample;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VKind {
    EmpiricalMultiplicative,
    EmpiricalAdditive,
    AnalyticUniform,
    AnalyticGaussian,
    Identity,
    Diagonal,
    /// User-supplied symmetric coupling, e.g. read back from a dump.
    Custom,
}

/// Symmetric matrix of pairwise loss-coupling weights.
#[derive(Debug, Clone, PartialEq)]
pub struct VMatrix {
    kind: VKind,
    entries: DMatrix<f64>,
}

impl VMatrix {
    /// Multiplicative empirical estimate from a target sample:
    /// `V(i,j) = (1/M) sum_q prod_k 1[t_q^k >= max(x_i^k, x_j^k)]`.
    pub fn empirical(train_features: &DMatrix<f64>, target: &TargetSample) -> Result<Self> {
        check_dims(train_features, target)?;
        let n_rows = train_features.nrows();
        let dim = train_features.ncols();
        let t = target.features();
        let m = t.nrows();

        let mut counts = vec![0u64; n_rows * n_rows];
        let mut dominated = Vec::with_capacity(n_rows);
        for q in 0..m {
            dominated.clear();
            'point: for i in 0..n_rows {
                for k in 0..dim {
                    if t[(q, k)] < train_features[(i, k)] {
                        continue 'point;
                    }
                }
                dominated.push(i);
            }
            for (a, &i) in dominated.iter().enumerate() {
                for &j in &dominated[a..] {
                    counts[i * n_rows + j] += 1;
                }
            }
        }
        Ok(Self::from_counts(
            VKind::EmpiricalMultiplicative,
            n_rows,
            &counts,
            m as u64,
        ))
    }

    /// Additive per-dimension estimate:
    /// `V(i,j) = (1/(nM)) sum_q sum_k 1[t_q^k >= max(x_i^k, x_j^k)]`,
    /// the mean over dimensions of 1-d multiplicative estimates.
    pub fn empirical_additive(train_features: &DMatrix<f64>, target: &TargetSample) -> Result<Self> {
        check_dims(train_features, target)?;
        let n_rows = train_features.nrows();
        let dim = train_features.ncols();
        let t = target.features();
        let m = t.nrows();

        let mut counts = vec![0u64; n_rows * n_rows];
        let mut dominated = Vec::with_capacity(n_rows);
        for q in 0..m {
            for k in 0..dim {
                let tq = t[(q, k)];
                dominated.clear();
                for i in 0..n_rows {
                    if tq >= train_features[(i, k)] {
                        dominated.push(i);
                    }
                }
                for (a, &i) in dominated.iter().enumerate() {
                    for &j in &dominated[a..] {
                        counts[i * n_rows + j] += 1;
                    }
                }
            }
        }
        Ok(Self::from_counts(
            VKind::EmpiricalAdditive,
            n_rows,
            &counts,
            (dim * m) as u64,
        ))
    }

    /// Analytic V for `mu = Uniform[-c_k, c_k]` per dimension:
    /// `V(i,j) = prod_k (c_k - max(x_i^k, x_j^k)) / (2 c_k)`.
    pub fn analytic_uniform(train_features: &DMatrix<f64>, c: &[f64]) -> Result<Self> {
        let n_rows = train_features.nrows();
        let dim = train_features.ncols();
        if c.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "{} support half-widths for {dim} features",
                c.len()
            )));
        }
        if let Some(bad) = c.iter().find(|&&ck| !(ck > 0.0)) {
            return Err(Error::InvalidParam(format!("support half-width {bad} must be positive")));
        }
        for i in 0..n_rows {
            for k in 0..dim {
                if train_features[(i, k)].abs() > c[k] {
                    return Err(Error::Domain(format!(
                        "training point {i} coordinate {k} = {} outside [-{}, {}]",
                        train_features[(i, k)],
                        c[k],
                        c[k]
                    )));
                }
            }
        }
        let entries = DMatrix::from_fn(n_rows, n_rows, |i, j| {
            (0..dim)
                .map(|k| {
                    let m = train_features[(i, k)].max(train_features[(j, k)]);
                    (c[k] - m) / (2.0 * c[k])
                })
                .product()
        });
        Ok(Self { kind: VKind::AnalyticUniform, entries })
    }

    /// Analytic V for 1-d standard normal `mu`:
    /// `V(i,j) = (1/2) erfc(max(x_i, x_j) / sqrt(2))`.
    pub fn analytic_gaussian(train_features: &DMatrix<f64>) -> Result<Self> {
        if train_features.ncols() != 1 {
            return Err(Error::Domain(format!(
                "gaussian analytic V supports 1-dimensional data, got {} features",
                train_features.ncols()
            )));
        }
        let n_rows = train_features.nrows();
        let entries = DMatrix::from_fn(n_rows, n_rows, |i, j| {
            let m = train_features[(i, 0)].max(train_features[(j, 0)]);
            0.5 * erfc(m / std::f64::consts::SQRT_2)
        });
        Ok(Self { kind: VKind::AnalyticGaussian, entries })
    }

    /// Identity coupling: recovers the classical uncoupled L2 loss.
    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParam("identity V needs n >= 1".into()));
        }
        Ok(Self { kind: VKind::Identity, entries: DMatrix::identity(n, n) })
    }

    /// Wrap an explicit symmetric coupling matrix. Symmetry and finiteness
    /// are enforced; definiteness is the caller's business.
    pub fn from_entries(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.nrows() != entries.ncols() {
            return Err(Error::InvalidParam(format!(
                "coupling matrix must be square and nonempty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        for i in 0..entries.nrows() {
            for j in 0..entries.ncols() {
                if !entries[(i, j)].is_finite() {
                    return Err(Error::InvalidParam("coupling entries must be finite".into()));
                }
                if entries[(i, j)] != entries[(j, i)] {
                    return Err(Error::InvalidParam(format!(
                        "coupling matrix not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { kind: VKind::Custom, entries })
    }

    /// Diagonal per-point loss weights, e.g. importance weights.
    pub fn diagonal(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParam("diagonal V needs at least one weight".into()));
        }
        if let Some(bad) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidParam(format!("weight {bad} must be finite and nonnegative")));
        }
        let n = weights.len();
        let mut entries = DMatrix::zeros(n, n);
        for (i, &w) in weights.iter().enumerate() {
            entries[(i, i)] = w;
        }
        Ok(Self { kind: VKind::Diagonal, entries })
    }

    fn from_counts(kind: VKind, n: usize, counts: &[u64], denom: u64) -> Self {
        let d = denom as f64;
        let mut entries = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = counts[i * n + j] as f64 / d;
                entries[(i, j)] = v;
                entries[(j, i)] = v;
            }
        }
        Self { kind, entries }
    }

    pub fn kind(&self) -> VKind {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// Row-major CSV dump, 17 significant digits per entry.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for i in 0..self.size() {
            let row: Vec<String> = (0..self.size())
                .map(|j| crate::dataset::fmt_csv_value(self.entries[(i, j)]))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn check_dims(train_features: &DMatrix<f64>, target: &TargetSample) -> Result<()> {
    if train_features.ncols() != target.n_features() {
        return Err(Error::DimensionMismatch(format!(
            "train has {} features, target has {}",
            train_features.ncols(),
            target.n_features()
        )));
    }
    if train_features.nrows() == 0 {
        return Err(Error::InvalidParam("no training rows".into()));
    }
    Ok(())
}
