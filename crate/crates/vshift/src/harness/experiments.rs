//! Seeded experiment protocols: synthetic probability-prediction error,
//! biased real-data classification, and the KDE bandwidth sweep.
//!
//! Every trial derives its randomness solely from `(master seed, trial
//! index)`, so reports are byte-reproducible and independent of how many
//! worker threads run the trials.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{self, WeightScheme};
use crate::dataset::{
    self, BiasDirection, BiasScheme, BiasSpec, BiasedSplit, LabeledDataset, TargetSample,
};
use crate::error::{Error, Result};
use crate::vmatrix::VMatrix;
use crate::vsvm::{self, KernelConfig, KernelFamily, VsvmModel};

/// SplitMix64 step; spreads master seed and trial index into independent
/// per-trial seeds.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

pub fn trial_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(1)))
}

const SALT_SOURCE: u64 = 0x736f75726365; // "source"
const SALT_SECOND: u64 = 0x7365636f6e64; // "second"

/// Root-mean-square gap between predicted and true conditional
/// probabilities over the evaluation points: the L2 error under the
/// target measure.
pub fn metric_l2_probability_error<P, T>(predict: P, truth: T, eval_points: &TargetSample) -> f64
where
    P: Fn(&[f64]) -> f64,
    T: Fn(&[f64]) -> f64,
{
    let m = eval_points.n_rows();
    let mut acc = 0.0;
    for q in 0..m {
        let row = eval_points.row(q);
        let d = predict(&row) - truth(&row);
        acc += d * d;
    }
    (acc / m as f64).sqrt()
}

/// Per-trial normalization against the unweighted method. `None` marks the
/// undefined case (unweighted error zero); such trials are excluded from
/// means and counted.
pub fn metric_normalized(method_error: f64, unweighted_error: f64) -> Option<f64> {
    if unweighted_error > 0.0 {
        Some(method_error / unweighted_error)
    } else {
        None
    }
}

/// Learning methods the harness compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Multiplicative empirical V from the target sample.
    Empirical,
    /// Additive empirical V; the default on real data.
    EmpiricalAdditive,
    /// Multiplicative empirical V computed on an independent second target
    /// draw (synthetic experiments only).
    EmpiricalSecondDraw,
    /// Analytic V for Uniform[-1, 1]^n.
    AnalyticUniform,
    /// Identity V: the unweighted classifier every trial normalizes
    /// against.
    Unweighted,
    /// KDE density-ratio weights as a diagonal V.
    Ratio,
    /// Ratio weights raised to `tau`.
    Exponentiated,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Empirical => "empirical",
            Method::EmpiricalAdditive => "empirical_additive",
            Method::EmpiricalSecondDraw => "empirical_second_draw",
            Method::AnalyticUniform => "analytic_uniform",
            Method::Unweighted => "unweighted",
            Method::Ratio => "ratio",
            Method::Exponentiated => "exponentiated",
        }
    }
}

/// Kernel learner and baseline hyperparameters shared by all methods in
/// one experiment.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LearnerConfig {
    pub kernel_family: KernelFamily,
    pub kernel_width: f64,
    pub gamma: f64,
    pub kde_bandwidth: f64,
    pub tau: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            kernel_family: KernelFamily::SqrtGaussian,
            kernel_width: 1.0,
            gamma: 0.1,
            kde_bandwidth: 2.0,
            tau: 0.5,
        }
    }
}

impl LearnerConfig {
    fn kernel(&self) -> Result<KernelConfig> {
        KernelConfig::new(self.kernel_family, self.kernel_width)
    }
}

fn fit_method(
    method: Method,
    train: &LabeledDataset,
    target: &TargetSample,
    second_target: Option<&TargetSample>,
    lc: &LearnerConfig,
) -> Result<VsvmModel> {
    let kernel = lc.kernel()?;
    let v = match method {
        Method::Empirical => VMatrix::empirical(train.features(), target)?,
        Method::EmpiricalAdditive => VMatrix::empirical_additive(train.features(), target)?,
        Method::EmpiricalSecondDraw => {
            let second = second_target.ok_or_else(|| {
                Error::InvalidParam("second-draw method needs a second target sample".into())
            })?;
            VMatrix::empirical(train.features(), second)?
        }
        Method::AnalyticUniform => {
            VMatrix::analytic_uniform(train.features(), &vec![1.0; train.n_features()])?
        }
        Method::Unweighted => VMatrix::identity(train.n_rows())?,
        Method::Ratio => {
            let w = baselines::importance_weights(
                train.features(),
                target,
                lc.kde_bandwidth,
                WeightScheme::Ratio,
                1.0,
            )?;
            return baselines::fit_weighted(train, &w, kernel, lc.gamma);
        }
        Method::Exponentiated => {
            let w = baselines::importance_weights(
                train.features(),
                target,
                lc.kde_bandwidth,
                WeightScheme::Exponentiated,
                lc.tau,
            )?;
            return baselines::fit_weighted(train, &w, kernel, lc.gamma);
        }
    };
    vsvm::fit(train, &v, kernel, lc.gamma)
}

/// How per-trial errors combine into the headline normalized figure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Mean over trials of per-trial error ratios (default).
    PerTrialRatio,
    /// Ratio of mean errors, pooled over trials.
    PooledRatio,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub method: String,
    pub error: f64,
    /// Error divided by the unweighted error of the same trial; absent when
    /// the trial was excluded (unweighted error zero).
    pub normalized: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bias_feature: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bias_direction: Option<BiasDirection>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodSummary {
    pub method: String,
    pub mean_normalized: f64,
    pub std_normalized: f64,
    pub mean_raw: f64,
    pub std_raw: f64,
    pub trials_used: usize,
    pub excluded: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: serde_json::Value,
    pub trials_requested: usize,
    pub trials_run: usize,
    pub skipped_trials: usize,
    pub aggregation: Aggregation,
    pub methods: Vec<MethodSummary>,
    pub trial_records: Vec<TrialRecord>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per method: name, mean, std, trials, excluded.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "method,mean,std,trials,excluded")?;
        for m in &self.methods {
            writeln!(
                w,
                "{},{},{},{},{}",
                m.method,
                dataset::fmt_csv_value(m.mean_normalized),
                dataset::fmt_csv_value(m.std_normalized),
                m.trials_used,
                m.excluded
            )?;
        }
        Ok(())
    }

    pub fn method_summary(&self, name: &str) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == name)
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Collapse trial records into per-method summaries.
fn summarize(
    methods: &[Method],
    records: &[TrialRecord],
    aggregation: Aggregation,
) -> Vec<MethodSummary> {
    let unweighted_raw: Vec<f64> = records
        .iter()
        .filter(|r| r.method == Method::Unweighted.name())
        .map(|r| r.error)
        .collect();
    methods
        .iter()
        .map(|m| {
            let raws: Vec<f64> = records
                .iter()
                .filter(|r| r.method == m.name())
                .map(|r| r.error)
                .collect();
            let ratios: Vec<f64> = records
                .iter()
                .filter(|r| r.method == m.name())
                .filter_map(|r| r.normalized)
                .collect();
            let excluded = raws.len() - ratios.len();
            let (mean_raw, std_raw) = mean_std(&raws);
            let (mut mean_normalized, std_normalized) = mean_std(&ratios);
            if aggregation == Aggregation::PooledRatio {
                let (pool_m, _) = mean_std(&raws);
                let (pool_u, _) = mean_std(&unweighted_raw);
                mean_normalized = if pool_u > 0.0 { pool_m / pool_u } else { f64::NAN };
            }
            MethodSummary {
                method: m.name().to_string(),
                mean_normalized,
                std_normalized,
                mean_raw,
                std_raw,
                trials_used: ratios.len(),
                excluded,
            }
        })
        .collect()
}

/// Run `trials` independent jobs, optionally on a thread pool. Output
/// order is by trial index either way.
fn run_trials<T, F>(trials: usize, jobs: usize, body: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    if jobs <= 1 {
        (0..trials).map(body).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidParam(format!("thread pool: {e}")))?;
        pool.install(|| (0..trials).into_par_iter().map(body).collect())
    }
}

// ---------------------------------------------------------------------------
// Synthetic experiments (probability prediction on the 1-d sigmoid problem)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SyntheticConfig {
    pub n_train: usize,
    pub m_target: usize,
    pub trials: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub learner: LearnerConfig,
    /// Size of the independent target draw for [`Method::EmpiricalSecondDraw`].
    pub second_draw_size: usize,
    pub aggregation: Aggregation,
    pub jobs: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_train: 200,
            m_target: 1000,
            trials: 50,
            seed: 0,
            methods: vec![
                Method::Empirical,
                Method::EmpiricalSecondDraw,
                Method::AnalyticUniform,
                Method::Unweighted,
                Method::Ratio,
                Method::Exponentiated,
            ],
            learner: LearnerConfig::default(),
            second_draw_size: 500,
            aggregation: Aggregation::PerTrialRatio,
            jobs: 1,
        }
    }
}

fn require_unweighted(methods: &[Method]) -> Result<()> {
    if methods.contains(&Method::Unweighted) {
        Ok(())
    } else {
        Err(Error::InvalidParam(
            "method set must include the unweighted baseline for normalization".into(),
        ))
    }
}

/// L2 probability error of each method against the known conditional,
/// averaged over seeded trials.
pub fn run_experiment_synthetic(cfg: &SyntheticConfig) -> Result<ExperimentReport> {
    require_unweighted(&cfg.methods)?;
    let needs_second = cfg.methods.contains(&Method::EmpiricalSecondDraw);

    let per_trial = run_trials(cfg.trials, cfg.jobs, |t| {
        let seed_t = trial_seed(cfg.seed, t as u64);
        let (train, target, truth) =
            dataset::gen_sigmoid_synthetic(cfg.n_train, cfg.m_target, seed_t)?;
        let second = if needs_second {
            Some(dataset::gen_sigmoid_target(
                cfg.second_draw_size,
                splitmix64(seed_t ^ SALT_SECOND),
            )?)
        } else {
            None
        };

        let mut errors = Vec::with_capacity(cfg.methods.len());
        for &m in &cfg.methods {
            let model = fit_method(m, &train, &target, second.as_ref(), &cfg.learner)?;
            let err = metric_l2_probability_error(
                |x| model.predict_proba(x).expect("dimension fixed within trial"),
                |x| truth(x[0]),
                &target,
            );
            errors.push((m, err));
        }
        Ok((seed_t, errors))
    })?;

    let mut records = Vec::new();
    for (t, (seed_t, errors)) in per_trial.iter().enumerate() {
        let unweighted = errors
            .iter()
            .find(|(m, _)| *m == Method::Unweighted)
            .map(|(_, e)| *e)
            .expect("unweighted is required");
        for (m, err) in errors {
            records.push(TrialRecord {
                trial: t,
                seed: *seed_t,
                method: m.name().to_string(),
                error: *err,
                normalized: metric_normalized(*err, unweighted),
                bias_feature: None,
                bias_direction: None,
            });
        }
    }

    Ok(ExperimentReport {
        experiment: "synthetic".into(),
        config: serde_json::to_value(cfg)?,
        trials_requested: cfg.trials,
        trials_run: cfg.trials,
        skipped_trials: 0,
        aggregation: cfg.aggregation,
        methods: summarize(&cfg.methods, &records, cfg.aggregation),
        trial_records: records,
    })
}

/// One prediction-curve row: grid point, method, predicted probability.
#[derive(Debug, Clone, Serialize)]
pub struct PredictionRow {
    pub x: f64,
    pub method: String,
    pub probability: f64,
}

/// Single-run robustness curves: fit every method on trial 0's data and
/// dump `predict_proba` on an even grid over `[-1, 1]`.
pub fn run_synthetic_prediction_dump(
    cfg: &SyntheticConfig,
    grid_points: usize,
) -> Result<Vec<PredictionRow>> {
    if grid_points < 2 {
        return Err(Error::InvalidParam("grid needs at least 2 points".into()));
    }
    let seed_t = trial_seed(cfg.seed, 0);
    let (train, target, _) = dataset::gen_sigmoid_synthetic(cfg.n_train, cfg.m_target, seed_t)?;
    let second = if cfg.methods.contains(&Method::EmpiricalSecondDraw) {
        Some(dataset::gen_sigmoid_target(
            cfg.second_draw_size,
            splitmix64(seed_t ^ SALT_SECOND),
        )?)
    } else {
        None
    };

    let mut rows = Vec::with_capacity(grid_points * cfg.methods.len());
    for &m in &cfg.methods {
        let model = fit_method(m, &train, &target, second.as_ref(), &cfg.learner)?;
        for i in 0..grid_points {
            let x = -1.0 + 2.0 * i as f64 / (grid_points - 1) as f64;
            rows.push(PredictionRow {
                x,
                method: m.name().to_string(),
                probability: model.predict_proba(&[x])?,
            });
        }
    }
    Ok(rows)
}

pub fn write_prediction_csv<W: Write>(mut w: W, rows: &[PredictionRow]) -> std::io::Result<()> {
    writeln!(w, "x,method,prob")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{}",
            dataset::fmt_csv_value(r.x),
            r.method,
            dataset::fmt_csv_value(r.probability)
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Biased real-data experiments (classification under manufactured shift)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceSpec {
    Twonorm { size: usize },
    Ringnorm { size: usize },
    Csv { path: String, label_column: Option<usize> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionPolicy {
    Up,
    Down,
    /// Drawn from the trial seed.
    RandomPerTrial,
    /// Up on even trials, down on odd.
    Alternate,
}

#[derive(Debug, Clone, Serialize)]
pub struct BiasExperimentConfig {
    pub scheme: BiasScheme,
    pub source: SourceSpec,
    pub trials: usize,
    pub seed: u64,
    pub train_size: usize,
    /// Target-set size; required by the rejection scheme, optional (default
    /// all remaining rows) for the weighted ones.
    pub test_size: Option<usize>,
    pub direction_policy: DirectionPolicy,
    /// Per-trial random feature subset (the 5-of-20 protocol on ringnorm).
    pub feature_subset: Option<usize>,
    pub methods: Vec<Method>,
    pub learner: LearnerConfig,
    pub aggregation: Aggregation,
    pub jobs: usize,
}

impl BiasExperimentConfig {
    /// Rejection-bias protocol defaults: 500 target / 100 train.
    pub fn experiment3(source: SourceSpec, trials: usize, seed: u64) -> Self {
        let feature_subset = match &source {
            SourceSpec::Ringnorm { .. } => Some(5),
            _ => None,
        };
        BiasExperimentConfig {
            scheme: BiasScheme::Sugiyama,
            source,
            trials,
            seed,
            train_size: 100,
            test_size: Some(500),
            direction_policy: DirectionPolicy::RandomPerTrial,
            feature_subset,
            methods: default_bias_methods(),
            learner: LearnerConfig::default(),
            aggregation: Aggregation::PerTrialRatio,
            jobs: 1,
        }
    }

    /// Single-feature median bias, 100 train points.
    pub fn experiment4(source: SourceSpec, trials: usize, seed: u64) -> Self {
        BiasExperimentConfig {
            scheme: BiasScheme::SingleFeature,
            source,
            trials,
            seed,
            train_size: 100,
            test_size: None,
            direction_policy: DirectionPolicy::RandomPerTrial,
            feature_subset: None,
            methods: default_bias_methods(),
            learner: LearnerConfig::default(),
            aggregation: Aggregation::PerTrialRatio,
            jobs: 1,
        }
    }

    /// Feature-norm median bias; the protocol of experiment 4 keyed on the
    /// vector norm.
    pub fn experiment5(source: SourceSpec, trials: usize, seed: u64) -> Self {
        BiasExperimentConfig {
            scheme: BiasScheme::Norm,
            ..Self::experiment4(source, trials, seed)
        }
    }
}

pub fn default_bias_methods() -> Vec<Method> {
    vec![
        Method::EmpiricalAdditive,
        Method::Unweighted,
        Method::Ratio,
        Method::Exponentiated,
    ]
}

fn load_source(spec: &SourceSpec, master_seed: u64) -> Result<LabeledDataset> {
    let source_seed = splitmix64(master_seed ^ SALT_SOURCE);
    match spec {
        SourceSpec::Twonorm { size } => dataset::gen_twonorm(*size, source_seed),
        SourceSpec::Ringnorm { size } => dataset::gen_ringnorm(*size, source_seed),
        SourceSpec::Csv { path, label_column } => {
            let probe = peek_columns(path)?;
            let label = label_column.unwrap_or(probe - 1);
            dataset::load_csv(path, label)
        }
    }
}

fn peek_columns(path: &str) -> Result<usize> {
    use std::io::BufRead;
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut first = String::new();
    std::io::BufReader::new(file)
        .read_line(&mut first)
        .map_err(|e| Error::io(path, e))?;
    let cols = first.trim_end().split(',').count();
    if cols == 0 {
        return Err(Error::Schema("no columns in first line".into()));
    }
    Ok(cols)
}

fn classification_error(model: &VsvmModel, target: &TargetSample, labels: &[u8]) -> Result<f64> {
    let predicted = model.predict_label_batch(target)?;
    let wrong = predicted.iter().zip(labels).filter(|(p, y)| p != y).count();
    Ok(wrong as f64 / labels.len() as f64)
}

struct BiasTrialOutcome {
    seed: u64,
    feature: Option<usize>,
    direction: Option<BiasDirection>,
    errors: Vec<(Method, f64)>,
}

/// Classification error of each method under the configured biasing
/// scheme, normalized per trial by the unweighted classifier. Trials whose
/// biasing draw runs out of data are skipped and counted.
pub fn run_experiment_bias(cfg: &BiasExperimentConfig) -> Result<ExperimentReport> {
    require_unweighted(&cfg.methods)?;
    if cfg.scheme == BiasScheme::Sugiyama && cfg.test_size.is_none() {
        return Err(Error::InvalidParam("the rejection scheme needs a test size".into()));
    }

    let raw_source = load_source(&cfg.source, cfg.seed)?;
    let (source, _) = dataset::normalize_dataset(&raw_source)?;

    let outcomes = run_trials(cfg.trials, cfg.jobs, |t| -> Result<Option<BiasTrialOutcome>> {
        let seed_t = trial_seed(cfg.seed, t as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed_t);

        let trial_source = match cfg.feature_subset {
            Some(k) if k < source.n_features() => {
                let mut cols: Vec<usize> = (0..source.n_features()).collect();
                for i in 0..k {
                    let j = i + rng.random_range(0..cols.len() - i);
                    cols.swap(i, j);
                }
                cols.truncate(k);
                cols.sort_unstable();
                source.select_features(&cols)?
            }
            _ => source.clone(),
        };

        let direction = match cfg.direction_policy {
            DirectionPolicy::Up => BiasDirection::Up,
            DirectionPolicy::Down => BiasDirection::Down,
            DirectionPolicy::RandomPerTrial => {
                if rng.random::<bool>() {
                    BiasDirection::Up
                } else {
                    BiasDirection::Down
                }
            }
            DirectionPolicy::Alternate => {
                if t % 2 == 0 {
                    BiasDirection::Up
                } else {
                    BiasDirection::Down
                }
            }
        };
        let feature = rng.random_range(0..trial_source.n_features());
        let spec = BiasSpec {
            scheme: cfg.scheme,
            feature: Some(feature),
            direction,
            train_size: cfg.train_size,
            test_size: cfg.test_size,
            seed: rng.random::<u64>(),
        };
        let split = match cfg.scheme {
            BiasScheme::Sugiyama => dataset::bias_sugiyama(&trial_source, &spec),
            BiasScheme::SingleFeature => dataset::bias_single_feature(&trial_source, &spec),
            BiasScheme::Norm => dataset::bias_norm(&trial_source, &spec),
        };
        let split: BiasedSplit = match split {
            Ok(s) => s,
            Err(Error::InsufficientData(_)) => return Ok(None),
            Err(other) => return Err(other),
        };

        let mut errors = Vec::with_capacity(cfg.methods.len());
        for &m in &cfg.methods {
            let model = fit_method(m, &split.train, &split.target, None, &cfg.learner)?;
            let err = classification_error(&model, &split.target, &split.target_labels)?;
            errors.push((m, err));
        }
        Ok(Some(BiasTrialOutcome {
            seed: seed_t,
            feature: split.feature,
            direction: split.direction,
            errors,
        }))
    })?;

    let mut records = Vec::new();
    let mut skipped = 0usize;
    for (t, outcome) in outcomes.iter().enumerate() {
        let Some(outcome) = outcome else {
            skipped += 1;
            continue;
        };
        let unweighted = outcome
            .errors
            .iter()
            .find(|(m, _)| *m == Method::Unweighted)
            .map(|(_, e)| *e)
            .expect("unweighted is required");
        for (m, err) in &outcome.errors {
            records.push(TrialRecord {
                trial: t,
                seed: outcome.seed,
                method: m.name().to_string(),
                error: *err,
                normalized: metric_normalized(*err, unweighted),
                bias_feature: outcome.feature,
                bias_direction: outcome.direction,
            });
        }
    }

    Ok(ExperimentReport {
        experiment: format!("bias_{:?}", cfg.scheme).to_lowercase(),
        config: serde_json::to_value(cfg)?,
        trials_requested: cfg.trials,
        trials_run: cfg.trials - skipped,
        skipped_trials: skipped,
        aggregation: cfg.aggregation,
        methods: summarize(&cfg.methods, &records, cfg.aggregation),
        trial_records: records,
    })
}

// ---------------------------------------------------------------------------
// Bandwidth sensitivity sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub bandwidth: f64,
    pub mean_normalized: f64,
    pub std_normalized: f64,
    pub trials_used: usize,
    pub excluded: usize,
}

/// Rerun the configured bias experiment with the ratio-weighted method at
/// each bandwidth; trials are paired across bandwidths through the shared
/// master seed.
pub fn run_bandwidth_sweep(
    base: &BiasExperimentConfig,
    bandwidths: &[f64],
) -> Result<Vec<SweepRow>> {
    if bandwidths.is_empty() {
        return Err(Error::InvalidParam("no bandwidths given".into()));
    }
    if let Some(bad) = bandwidths.iter().find(|h| !(**h > 0.0)) {
        return Err(Error::InvalidParam(format!("bandwidth {bad} must be positive")));
    }
    let mut rows = Vec::with_capacity(bandwidths.len());
    for &h in bandwidths {
        let mut cfg = base.clone();
        cfg.methods = vec![Method::Unweighted, Method::Ratio];
        cfg.learner.kde_bandwidth = h;
        let report = run_experiment_bias(&cfg)?;
        let ratio = report
            .method_summary(Method::Ratio.name())
            .expect("ratio method present");
        rows.push(SweepRow {
            bandwidth: h,
            mean_normalized: ratio.mean_normalized,
            std_normalized: ratio.std_normalized,
            trials_used: ratio.trials_used,
            excluded: ratio.excluded,
        });
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(w, "h,mean_normalized,std_normalized,trials,excluded")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            dataset::fmt_csv_value(r.bandwidth),
            dataset::fmt_csv_value(r.mean_normalized),
            dataset::fmt_csv_value(r.std_normalized),
            r.trials_used,
            r.excluded
        )?;
    }
    Ok(())
}
