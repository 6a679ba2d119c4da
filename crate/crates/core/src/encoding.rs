//! Likelihood vectors, class encoding sets and the decision rules that map a
//! likelihood vector to an in-scope class or to out-of-scope.
//!
//! Four rules are provided:
//!
//! | rule                          | statistic             | accepts when       |
//! |-------------------------------|-----------------------|--------------------|
//! | [`classify_max`]              | `max z_i`             | statistic `> θ`    |
//! | [`classify_softmax`]          | `max softmax(z)_i`    | statistic `> θ`    |
//! | [`classify_one_hot_distance`] | `min ‖z − h_i‖`       | statistic `≤ θ`    |
//! | [`classify_dense`]            | `min ‖z − r_i‖`       | statistic `≤ θ`    |
//!
//! Ties between classes go to the lowest class index. Under score-floor
//! semantics a threshold of exactly zero disables rejection.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Output of a likelihood model for one input, every component in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodVector(Vec<f64>);

impl LikelihoodVector {
    /// Builds a likelihood vector, clamping every component into `[-1, 1]`.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("likelihood vector must have at least one component"));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::invalid("likelihood vector contains NaN"));
        }
        let mut values = values;
        for v in values.iter_mut() {
            *v = v.clamp(-1.0, 1.0);
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Reuses the allocation for a new point of the same dimension.
    pub(crate) fn overwrite(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.0.len());
        for (dst, src) in self.0.iter_mut().zip(values) {
            *dst = src.clamp(-1.0, 1.0);
        }
    }
}

impl AsRef<[f64]> for LikelihoodVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Result of a decision rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassDecision {
    /// 0-based index of the accepted class.
    InScope(usize),
    OutOfScope,
}

impl ClassDecision {
    pub fn is_in_scope(self) -> bool {
        matches!(self, ClassDecision::InScope(_))
    }

    pub fn class(self) -> Option<usize> {
        match self {
            ClassDecision::InScope(i) => Some(i),
            ClassDecision::OutOfScope => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ThresholdSemantics {
    /// Accept when the score is strictly greater than θ (θ = 0 accepts everything).
    ScoreFloor,
    /// Accept when the distance is at most θ.
    DistanceCeiling,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPolicy {
    theta: f64,
    semantics: ThresholdSemantics,
}

impl ThresholdPolicy {
    /// Score floor for the max and softmax rules, `θ ∈ [0, 1]`.
    pub fn score_floor(theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::invalid(format!("score floor {theta} outside [0, 1]")));
        }
        Ok(Self {
            theta,
            semantics: ThresholdSemantics::ScoreFloor,
        })
    }

    /// Distance ceiling for the distance rules. Any finite `θ ≥ 0` is allowed
    /// since distances in `[-1, 1]^p` reach `2√p`.
    pub fn distance_ceiling(theta: f64) -> Result<Self> {
        if !(theta.is_finite() && theta >= 0.0) {
            return Err(Error::invalid(format!("distance ceiling {theta} must be finite and >= 0")));
        }
        Ok(Self {
            theta,
            semantics: ThresholdSemantics::DistanceCeiling,
        })
    }

    pub fn new(theta: f64, semantics: ThresholdSemantics) -> Result<Self> {
        match semantics {
            ThresholdSemantics::ScoreFloor => Self::score_floor(theta),
            ThresholdSemantics::DistanceCeiling => Self::distance_ceiling(theta),
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn semantics(&self) -> ThresholdSemantics {
        self.semantics
    }

    /// Whether a rule statistic (score or distance) is accepted as in-scope.
    pub fn accepts(&self, statistic: f64) -> bool {
        match self.semantics {
            ThresholdSemantics::ScoreFloor => self.theta == 0.0 || statistic > self.theta,
            ThresholdSemantics::DistanceCeiling => statistic <= self.theta,
        }
    }

    fn expect(&self, semantics: ThresholdSemantics) -> Result<()> {
        if self.semantics != semantics {
            return Err(Error::invalid(format!(
                "rule needs a {semantics:?} threshold, got {:?}",
                self.semantics
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EncodingFamily {
    OneHot,
    Dense,
}

/// `c ≥ 2` class vectors of a common dimension `p`, components in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassEncodingSet {
    vectors: Vec<Vec<f64>>,
    family: EncodingFamily,
    class_names: Vec<String>,
}

fn default_names(c: usize) -> Vec<String> {
    (0..c).map(|i| format!("class_{i}")).collect()
}

impl ClassEncodingSet {
    pub fn new(vectors: Vec<Vec<f64>>, family: EncodingFamily, class_names: Vec<String>) -> Result<Self> {
        let c = vectors.len();
        if c < 2 {
            return Err(Error::invalid(format!("an encoding set needs at least 2 classes, got {c}")));
        }
        if class_names.len() != c {
            return Err(Error::invalid(format!("{} class names for {c} vectors", class_names.len())));
        }
        let p = vectors[0].len();
        if p == 0 {
            return Err(Error::invalid("encoding vectors must have dimension >= 1"));
        }
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    actual: v.len(),
                });
            }
            if let Some(x) = v.iter().find(|x| !(-1.0..=1.0).contains(*x)) {
                return Err(Error::invalid(format!("component {x} of class {i} outside [-1, 1]")));
            }
        }
        if family == EncodingFamily::OneHot {
            let is_basis = p == c
                && vectors
                    .iter()
                    .enumerate()
                    .all(|(i, v)| v.iter().enumerate().all(|(j, &x)| x == if i == j { 1.0 } else { 0.0 }));
            if !is_basis {
                return Err(Error::invalid("one-hot family requires the standard basis vectors"));
            }
        }
        Ok(Self {
            vectors,
            family,
            class_names,
        })
    }

    /// Dense set with default class names `class_0 .. class_{c-1}`.
    pub fn dense(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let names = default_names(vectors.len());
        Self::new(vectors, EncodingFamily::Dense, names)
    }

    pub fn with_class_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.vectors.len() {
            return Err(Error::invalid(format!(
                "{} class names for {} classes",
                names.len(),
                self.vectors.len()
            )));
        }
        self.class_names = names;
        Ok(self)
    }

    pub fn num_classes(&self) -> usize {
        self.vectors.len()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn vector(&self, class: usize) -> &[f64] {
        &self.vectors[class]
    }

    pub fn family(&self) -> EncodingFamily {
        self.family
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    /// Renders the set in the text encoding format: a `c p` header followed
    /// by one line of `p` reals per class.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{} {}", self.num_classes(), self.dim()).unwrap();
        for v in &self.vectors {
            let row: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
            writeln!(out, "{}", row.join(" ")).unwrap();
        }
        out
    }

    /// Parses the text encoding format. `origin` only labels error messages.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (hline, header) = lines
            .next()
            .ok_or_else(|| Error::format(origin, 0, "missing `c p` header"))?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        let parse_dim = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::format(origin, hline, format!("bad header field `{s}`")))
        };
        if dims.len() != 2 {
            return Err(Error::format(origin, hline, "header must be two integers `c p`"));
        }
        let (c, p) = (parse_dim(dims[0])?, parse_dim(dims[1])?);

        let mut vectors = Vec::with_capacity(c);
        for (lineno, line) in lines {
            if vectors.len() == c {
                return Err(Error::format(origin, lineno, format!("more than {c} rows")));
            }
            let row = line
                .split_whitespace()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::format(origin, lineno, format!("bad real `{s}`")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if row.len() != p {
                return Err(Error::format(
                    origin,
                    lineno,
                    format!("expected {p} components, found {}", row.len()),
                ));
            }
            if let Some(x) = row.iter().find(|x| !(-1.0..=1.0).contains(*x)) {
                return Err(Error::format(origin, lineno, format!("component {x} outside [-1, 1]")));
            }
            vectors.push(row);
        }
        if vectors.len() != c {
            return Err(Error::format(
                origin,
                0,
                format!("header declares {c} rows, found {}", vectors.len()),
            ));
        }
        ClassEncodingSet::dense(vectors)
    }
}

/// The `c` standard basis vectors of `R^c`.
pub fn one_hot_encoding_set(c: usize) -> Result<ClassEncodingSet> {
    if c < 2 {
        return Err(Error::invalid(format!("one-hot encoding needs c >= 2, got {c}")));
    }
    let vectors = (0..c)
        .map(|i| (0..c).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    ClassEncodingSet::new(vectors, EncodingFamily::OneHot, default_names(c))
}

/// `c` vectors of dimension `n` with components i.i.d. uniform on `[-1, 1]`.
pub fn random_encoding_set(c: usize, n: usize, seed: u64) -> Result<ClassEncodingSet> {
    if c < 2 || n == 0 {
        return Err(Error::invalid(format!("random encoding needs c >= 2 and N >= 1, got c={c}, N={n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vectors = (0..c)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect();
    ClassEncodingSet::dense(vectors)
}

pub fn load_encoding_set(path: impl AsRef<Path>) -> Result<ClassEncodingSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ClassEncodingSet::parse(&text, path)
}

pub fn save_encoding_set(set: &ClassEncodingSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, set.to_text()).map_err(|e| Error::io(path, e))
}

/// Numerically stable softmax (max subtracted before exponentiation).
pub fn softmax(z: &LikelihoodVector) -> Vec<f64> {
    softmax_slice(z.values())
}

pub(crate) fn softmax_slice(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Index of the largest value, lowest index on ties.
pub(crate) fn argmax(values: &[f64]) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Nearest one-hot vector `h_i`, evaluated without materializing the basis.
fn nearest_one_hot(z: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for i in 0..z.len() {
        let d = z
            .iter()
            .enumerate()
            .map(|(j, &x)| {
                let h = if i == j { 1.0 } else { 0.0 };
                (x - h) * (x - h)
            })
            .sum::<f64>()
            .sqrt();
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn nearest(z: &[f64], enc: &ClassEncodingSet) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, r) in enc.vectors().iter().enumerate() {
        let d = euclidean(z, r);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn decide(class: usize, statistic: f64, policy: &ThresholdPolicy) -> ClassDecision {
    if policy.accepts(statistic) {
        ClassDecision::InScope(class)
    } else {
        ClassDecision::OutOfScope
    }
}

/// Thresholded max: the largest coordinate wins if it exceeds θ.
pub fn classify_max(z: &LikelihoodVector, policy: &ThresholdPolicy) -> Result<ClassDecision> {
    policy.expect(ThresholdSemantics::ScoreFloor)?;
    let (class, score) = argmax(z.values());
    Ok(decide(class, score, policy))
}

/// Thresholded softmax: the most probable class wins if its probability exceeds θ.
pub fn classify_softmax(z: &LikelihoodVector, policy: &ThresholdPolicy) -> Result<ClassDecision> {
    policy.expect(ThresholdSemantics::ScoreFloor)?;
    let (class, score) = argmax(&softmax(z));
    Ok(decide(class, score, policy))
}

/// Nearest one-hot vector within a distance ceiling.
pub fn classify_one_hot_distance(z: &LikelihoodVector, policy: &ThresholdPolicy) -> Result<ClassDecision> {
    policy.expect(ThresholdSemantics::DistanceCeiling)?;
    let (class, dist) = nearest_one_hot(z.values());
    Ok(decide(class, dist, policy))
}

/// Nearest encoding vector within a distance ceiling, in any dimension.
pub fn classify_dense(
    z: &LikelihoodVector,
    enc: &ClassEncodingSet,
    policy: &ThresholdPolicy,
) -> Result<ClassDecision> {
    policy.expect(ThresholdSemantics::DistanceCeiling)?;
    if z.dim() != enc.dim() {
        return Err(Error::DimensionMismatch {
            expected: enc.dim(),
            actual: z.dim(),
        });
    }
    let (class, dist) = nearest(z.values(), enc);
    Ok(decide(class, dist, policy))
}

/// A decision rule bound to its class count (and encoding, for the dense rule).
#[derive(Debug, Clone, PartialEq)]
pub enum DecisionRule {
    Max { classes: usize },
    Softmax { classes: usize },
    OneHotDistance { classes: usize },
    Dense(ClassEncodingSet),
}

/// Would-be class at θ = 0 together with the statistic the threshold is applied to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleOutput {
    pub class: usize,
    pub statistic: f64,
}

impl DecisionRule {
    pub fn num_classes(&self) -> usize {
        match self {
            DecisionRule::Max { classes }
            | DecisionRule::Softmax { classes }
            | DecisionRule::OneHotDistance { classes } => *classes,
            DecisionRule::Dense(enc) => enc.num_classes(),
        }
    }

    /// Dimension of the likelihood vectors the rule consumes.
    pub fn input_dim(&self) -> usize {
        match self {
            DecisionRule::Dense(enc) => enc.dim(),
            _ => self.num_classes(),
        }
    }

    pub fn semantics(&self) -> ThresholdSemantics {
        match self {
            DecisionRule::Max { .. } | DecisionRule::Softmax { .. } => ThresholdSemantics::ScoreFloor,
            DecisionRule::OneHotDistance { .. } | DecisionRule::Dense(_) => ThresholdSemantics::DistanceCeiling,
        }
    }

    fn check_dim(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: z.len(),
            });
        }
        Ok(())
    }

    /// Runs the rule without a threshold.
    pub fn evaluate(&self, z: &LikelihoodVector) -> Result<RuleOutput> {
        self.check_dim(z.values())?;
        let (class, statistic) = match self {
            DecisionRule::Max { .. } => argmax(z.values()),
            DecisionRule::Softmax { .. } => argmax(&softmax(z)),
            DecisionRule::OneHotDistance { .. } => nearest_one_hot(z.values()),
            DecisionRule::Dense(enc) => nearest(z.values(), enc),
        };
        Ok(RuleOutput { class, statistic })
    }

    pub fn decide(&self, z: &LikelihoodVector, policy: &ThresholdPolicy) -> Result<ClassDecision> {
        policy.expect(self.semantics())?;
        let out = self.evaluate(z)?;
        Ok(decide(out.class, out.statistic, policy))
    }

    /// Maps a rule statistic onto a scale where larger means more in-scope.
    pub fn acceptance_score(&self, statistic: f64) -> f64 {
        match self.semantics() {
            ThresholdSemantics::ScoreFloor => statistic,
            ThresholdSemantics::DistanceCeiling => -statistic,
        }
    }
}
