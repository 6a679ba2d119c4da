//! The comparison protocol: one-hot baselines trained once, random dense
//! encodings trained `K` times per dimension, metrics aggregated per cell.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::data::{RawDataset, OOS_LABEL};
use super::embed::{Embedder, EmbeddingSource};
use crate::encoding::{one_hot_encoding_set, random_encoding_set, ClassEncodingSet, DecisionRule};
use crate::error::{Error, Result};
use crate::metrics::{compute_eer, score_samples, EvaluationReport};
use crate::model::{train_classifier, EmbeddedSample, Loss, NetworkConfig, SampleLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    /// Cross-entropy training, softmax score floor.
    OneHotSoftmax,
    /// One-hot targets, nearest-basis-vector distance ceiling.
    OneHotDistance,
    /// MSE training toward `R(N)` codes drawn uniformly from `[-1, 1]^N`.
    RandomDense,
    /// MSE training toward a user-supplied encoding.
    LoadedEncoding,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::OneHotSoftmax,
        Algorithm::OneHotDistance,
        Algorithm::RandomDense,
        Algorithm::LoadedEncoding,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::OneHotSoftmax => "one_hot_softmax",
            Algorithm::OneHotDistance => "one_hot_distance",
            Algorithm::RandomDense => "random_dense",
            Algorithm::LoadedEncoding => "loaded_encoding",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.tag() == s)
            .ok_or_else(|| Error::invalid(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub algorithms: Vec<Algorithm>,
    pub n_values: Vec<usize>,
    /// Random encodings drawn per `N`.
    pub samples_per_n: usize,
    /// Architecture and optimizer template; dimensions, loss and seed are
    /// set per run.
    pub network: NetworkConfig,
    pub seed: u64,
    pub embedding: EmbeddingSource,
    /// Required by [`Algorithm::LoadedEncoding`].
    pub loaded_encoding: Option<ClassEncodingSet>,
    /// Training loss of the one-hot distance baseline.
    pub one_hot_distance_loss: Loss,
}

impl ExperimentConfig {
    pub fn new(algorithms: Vec<Algorithm>, n_values: Vec<usize>, embedding: EmbeddingSource) -> Self {
        Self {
            algorithms,
            n_values,
            samples_per_n: 500,
            network: NetworkConfig::new(1, 1, Loss::CrossEntropy),
            seed: 0,
            embedding,
            loaded_encoding: None,
            one_hot_distance_loss: Loss::CrossEntropy,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(Error::invalid("no algorithms selected"));
        }
        if self.samples_per_n == 0 {
            return Err(Error::invalid("samples per N must be >= 1"));
        }
        if self.algorithms.contains(&Algorithm::RandomDense) {
            if self.n_values.is_empty() {
                return Err(Error::invalid("random_dense needs at least one N value"));
            }
            if self.n_values.contains(&0) {
                return Err(Error::invalid("N values must be >= 1"));
            }
        }
        if self.algorithms.contains(&Algorithm::LoadedEncoding) && self.loaded_encoding.is_none() {
            return Err(Error::invalid("loaded_encoding needs an encoding file"));
        }
        Ok(())
    }
}

/// Train and test samples with resolved embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedDataset {
    pub train: Vec<EmbeddedSample>,
    pub test: Vec<EmbeddedSample>,
    pub class_names: Vec<String>,
}

impl EmbeddedDataset {
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn input_dim(&self) -> usize {
        self.train.first().map_or(0, |s| s.embedding.len())
    }
}

pub fn embed_dataset(data: &RawDataset, embedder: &Embedder) -> Result<EmbeddedDataset> {
    let label = |name: &str| -> Result<SampleLabel> {
        if name == OOS_LABEL {
            return Ok(SampleLabel::OutOfScope);
        }
        data.class_index(name)
            .map(SampleLabel::Class)
            .ok_or_else(|| Error::Dataset(format!("unknown label `{name}`")))
    };
    let convert = |rows: &[(String, String)]| -> Result<Vec<EmbeddedSample>> {
        rows.iter()
            .map(|(text, name)| Ok(EmbeddedSample::new(embedder.embed(text)?, label(name)?)))
            .collect()
    };
    let train = convert(&data.train)?;
    if train.iter().any(|s| s.label == SampleLabel::OutOfScope) {
        return Err(Error::Dataset("training data contains out-of-scope rows".into()));
    }
    Ok(EmbeddedDataset {
        train,
        test: convert(&data.test)?,
        class_names: data.class_names.clone(),
    })
}

/// Metrics of one trained network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMetrics {
    pub seed: u64,
    pub eer: f64,
    /// FAR at the equal-error threshold.
    pub far: f64,
    pub iser: f64,
}

impl RunMetrics {
    fn from_report(seed: u64, r: &EvaluationReport) -> Self {
        Self {
            seed,
            eer: r.eer,
            far: r.far_at_theta,
            iser: r.iser,
        }
    }
}

/// Trains toward `targets` with `loss`, evaluates `rule` on the test split.
pub fn train_and_evaluate(
    data: &EmbeddedDataset,
    targets: &ClassEncodingSet,
    rule: &DecisionRule,
    network: &NetworkConfig,
    loss: Loss,
    seed: u64,
) -> Result<EvaluationReport> {
    let mut cfg = network.clone();
    cfg.input_dim = data.input_dim();
    cfg.output_dim = targets.dim();
    cfg.loss = loss;
    cfg.seed = seed;
    let model = train_classifier(&data.train, targets, cfg)?;
    let scored = score_samples(&model, rule, &data.test)?;
    Ok(compute_eer(&scored, rule.semantics())?.with_split("test"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSummary {
    pub avg: f64,
    /// Population standard deviation.
    pub std: f64,
    pub min: f64,
}

impl MetricSummary {
    pub fn of(values: &[f64]) -> Self {
        assert!(!values.is_empty(), "summary of no values");
        let n = values.len() as f64;
        let avg = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - avg).powi(2)).sum::<f64>() / n;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        // rounding can put the mean of identical values a hair below them
        Self {
            avg: avg.max(min),
            std: var.sqrt(),
            min,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub algorithm: Algorithm,
    /// Encoding dimension.
    pub n: usize,
    pub eer: MetricSummary,
    pub far: MetricSummary,
    pub iser: MetricSummary,
    /// Individual runs in seed order.
    pub runs: Vec<RunMetrics>,
}

impl ReportRow {
    pub fn from_runs(algorithm: Algorithm, n: usize, runs: Vec<RunMetrics>) -> Result<Self> {
        if runs.is_empty() {
            return Err(Error::invalid("report row needs at least one run"));
        }
        let col = |f: fn(&RunMetrics) -> f64| MetricSummary::of(&runs.iter().map(f).collect::<Vec<_>>());
        Ok(Self {
            algorithm,
            n,
            eer: col(|r| r.eer),
            far: col(|r| r.far),
            iser: col(|r| r.iser),
            runs,
        })
    }

    /// The run with the lowest FAR (earliest seed on ties).
    pub fn best_far_run(&self) -> &RunMetrics {
        self.runs
            .iter()
            .reduce(|best, r| if r.far < best.far { r } else { best })
            .expect("rows are never empty")
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportTable {
    pub rows: Vec<ReportRow>,
    /// Split the metrics were computed on.
    pub split: String,
}

impl ReportTable {
    pub fn row(&self, algorithm: Algorithm, n: usize) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.algorithm == algorithm && r.n == n)
    }

    pub fn baseline(&self) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.algorithm == Algorithm::OneHotSoftmax)
    }
}

/// Resolves embeddings and runs [`run_embedded`].
pub fn run_experiment(data: &RawDataset, config: &ExperimentConfig) -> Result<ReportTable> {
    config.validate()?;
    let embedder = Embedder::from_source(&config.embedding)?;
    run_embedded(&embed_dataset(data, &embedder)?, config)
}

/// Rows come out in `config.algorithms` order, random-dense rows in
/// `n_values` order. Random run `k` (1-based) draws its encoding and network
/// initialization from `seed + k`.
pub fn run_embedded(data: &EmbeddedDataset, config: &ExperimentConfig) -> Result<ReportTable> {
    config.validate()?;
    let c = data.num_classes();
    if c < 2 {
        return Err(Error::Dataset(format!("need at least 2 classes, found {c}")));
    }
    let mut rows = Vec::new();
    for &algorithm in &config.algorithms {
        match algorithm {
            Algorithm::OneHotSoftmax | Algorithm::OneHotDistance => {
                let (rule, loss) = if algorithm == Algorithm::OneHotSoftmax {
                    (DecisionRule::Softmax { classes: c }, Loss::CrossEntropy)
                } else {
                    (DecisionRule::OneHotDistance { classes: c }, config.one_hot_distance_loss)
                };
                let targets = one_hot_encoding_set(c)?;
                let report = train_and_evaluate(data, &targets, &rule, &config.network, loss, config.seed)?;
                rows.push(ReportRow::from_runs(
                    algorithm,
                    c,
                    vec![RunMetrics::from_report(config.seed, &report)],
                )?);
            }
            Algorithm::RandomDense => {
                for &n in &config.n_values {
                    let runs = (1..=config.samples_per_n as u64)
                        .into_par_iter()
                        .map(|k| {
                            let seed = config.seed.wrapping_add(k);
                            let enc = random_encoding_set(c, n, seed)?;
                            let rule = DecisionRule::Dense(enc.clone());
                            let report = train_and_evaluate(data, &enc, &rule, &config.network, Loss::Mse, seed)?;
                            Ok(RunMetrics::from_report(seed, &report))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    rows.push(ReportRow::from_runs(algorithm, n, runs)?);
                }
            }
            Algorithm::LoadedEncoding => {
                let enc = config.loaded_encoding.clone().expect("checked by validate");
                if enc.num_classes() != c {
                    return Err(Error::invalid(format!(
                        "loaded encoding has {} classes, dataset has {c}",
                        enc.num_classes()
                    )));
                }
                let rule = DecisionRule::Dense(enc.clone());
                let report = train_and_evaluate(data, &enc, &rule, &config.network, Loss::Mse, config.seed)?;
                rows.push(ReportRow::from_runs(
                    algorithm,
                    enc.dim(),
                    vec![RunMetrics::from_report(config.seed, &report)],
                )?);
            }
        }
    }
    Ok(ReportTable {
        rows,
        split: "test".into(),
    })
}
