//! Covariate-shift-robust learning built on loss coupling through the
//! empirical cumulative distribution of an unlabeled target sample.
//!
//! The central object is the [`vmatrix::VMatrix`]: a symmetric matrix `V`
//! whose entry `(i, j)` is the probability mass (under a chosen measure)
//! of the region dominating both training points `x_i` and `x_j`
//! componentwise. Plugging `V` into the pairwise squared loss
//!
//! ```text
//! rho^2 = (1/N^2) * sum_ij (f(x_i) - y_i) (f(x_j) - y_j) V(i, j)
//! ```
//!
//! recenters the training loss on the target distribution without ever
//! estimating a density. Two learners minimize this loss in closed form:
//! a kernel model ([`vsvm`]) and gradient-boosted regression trees
//! ([`vboost`]). Classical density-ratio importance weighting lives in
//! [`baselines`] for comparison, and [`harness`] drives seeded experiment
//! protocols plus Monte-Carlo verification of the estimator's statistical
//! guarantees.

pub mod baselines;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod vboost;
pub mod vmatrix;
pub mod vsvm;

pub use error::{Error, Result};
