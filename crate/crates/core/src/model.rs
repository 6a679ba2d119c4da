//! The likelihood model: `input → hidden (ReLU, dropout) → output (tanh)`.
//!
//! Outputs live in `[-1, 1]^p`. With [`Loss::CrossEntropy`] the softmax is
//! taken over the pre-tanh logits during training only; prediction always
//! returns the tanh outputs. With [`Loss::Mse`] the tanh outputs are fit to
//! the class vectors of the target encoding.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::encoding::{ClassEncodingSet, EncodingFamily, LikelihoodVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Loss {
    CrossEntropy,
    Mse,
}

impl Loss {
    pub fn tag(self) -> &'static str {
        match self {
            Loss::CrossEntropy => "cross_entropy",
            Loss::Mse => "mse",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "cross_entropy" => Some(Loss::CrossEntropy),
            "mse" => Some(Loss::Mse),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SampleLabel {
    Class(usize),
    /// Only valid in evaluation data.
    OutOfScope,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedSample {
    pub embedding: Vec<f64>,
    pub label: SampleLabel,
}

impl EmbeddedSample {
    pub fn new(embedding: Vec<f64>, label: SampleLabel) -> Self {
        Self { embedding, label }
    }

    pub fn class(embedding: Vec<f64>, class: usize) -> Self {
        Self::new(embedding, SampleLabel::Class(class))
    }

    pub fn oos(embedding: Vec<f64>) -> Self {
        Self::new(embedding, SampleLabel::OutOfScope)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub output_dim: usize,
    pub dropout_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub loss: Loss,
    pub seed: u64,
}

impl NetworkConfig {
    /// Defaults: 768 hidden units, dropout 0.1, 50 epochs, batches of 32, Adam lr 0.001.
    pub fn new(input_dim: usize, output_dim: usize, loss: Loss) -> Self {
        Self {
            input_dim,
            hidden_dim: 768,
            output_dim,
            dropout_rate: 0.1,
            epochs: 50,
            batch_size: 32,
            learning_rate: 0.001,
            loss,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_dim == 0 || self.output_dim == 0 {
            return Err(Error::invalid("network dimensions must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::invalid(format!("dropout rate {} outside [0, 1)", self.dropout_rate)));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::invalid("epochs and batch size must be >= 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        Ok(())
    }

    fn param_count(&self) -> usize {
        let (n, h, p) = (self.input_dim, self.hidden_dim, self.output_dim);
        h * n + h + p * h + p
    }
}

/// Trained weights. Parameters are stored flat as `[w1 | b1 | w2 | b2]`,
/// matrices row-major with one row per destination unit.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodModel {
    config: NetworkConfig,
    params: Vec<f64>,
}

struct Layout {
    n: usize,
    h: usize,
    p: usize,
    b1: usize,
    w2: usize,
    b2: usize,
}

impl Layout {
    fn of(config: &NetworkConfig) -> Self {
        let (n, h, p) = (config.input_dim, config.hidden_dim, config.output_dim);
        Self {
            n,
            h,
            p,
            b1: h * n,
            w2: h * n + h,
            b2: h * n + h + p * h,
        }
    }
}

impl LikelihoodModel {
    /// Glorot-uniform weights and zero biases from the config seed.
    pub fn initialize(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Self::init_with(config, &mut rng))
    }

    fn init_with(config: NetworkConfig, rng: &mut ChaCha8Rng) -> Self {
        let l = Layout::of(&config);
        let mut params = vec![0.0; config.param_count()];
        let limit1 = (6.0 / (l.n + l.h) as f64).sqrt();
        for w in &mut params[..l.b1] {
            *w = rng.random_range(-limit1..=limit1);
        }
        let limit2 = (6.0 / (l.h + l.p) as f64).sqrt();
        for w in &mut params[l.w2..l.b2] {
            *w = rng.random_range(-limit2..=limit2);
        }
        Self { config, params }
    }

    /// All weights and biases zero.
    pub fn zeros(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let params = vec![0.0; config.param_count()];
        Ok(Self { config, params })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.config.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.config.input_dim,
                actual: x.len(),
            });
        }
        Ok(())
    }

    fn hidden_pre(&self, x: &[f64], out: &mut [f64]) {
        let l = Layout::of(&self.config);
        let w1 = &self.params[..l.b1];
        let b1 = &self.params[l.b1..l.w2];
        for (k, o) in out.iter_mut().enumerate() {
            let row = &w1[k * l.n..(k + 1) * l.n];
            *o = b1[k] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    fn output_pre(&self, hidden: &[f64], out: &mut [f64]) {
        let l = Layout::of(&self.config);
        let w2 = &self.params[l.w2..l.b2];
        let b2 = &self.params[l.b2..];
        for (j, o) in out.iter_mut().enumerate() {
            let row = &w2[j * l.h..(j + 1) * l.h];
            *o = b2[j] + row.iter().zip(hidden).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    /// Pre-activation outputs of the last layer (inference mode).
    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut hidden = vec![0.0; self.config.hidden_dim];
        self.hidden_pre(x, &mut hidden);
        for v in hidden.iter_mut() {
            *v = v.max(0.0);
        }
        let mut out = vec![0.0; self.config.output_dim];
        self.output_pre(&hidden, &mut out);
        Ok(out)
    }

    /// Likelihood vector for one embedding; dropout is never applied here.
    pub fn predict(&self, x: &[f64]) -> Result<LikelihoodVector> {
        let z: Vec<f64> = self.logits(x)?.into_iter().map(f64::tanh).collect();
        LikelihoodVector::new(z)
    }

    pub fn predict_batch<X: AsRef<[f64]>>(&self, xs: &[X]) -> Result<Vec<LikelihoodVector>> {
        xs.iter().map(|x| self.predict(x.as_ref())).collect()
    }

    /// Mean loss over `data` without dropout.
    pub fn loss(&self, data: &[EmbeddedSample], targets: &ClassEncodingSet) -> Result<f64> {
        Ok(self.loss_and_gradient(data, targets)?.0)
    }

    /// Mean loss and its gradient with respect to [`parameters`](Self::parameters),
    /// computed without dropout.
    pub fn loss_and_gradient(&self, data: &[EmbeddedSample], targets: &ClassEncodingSet) -> Result<(f64, Vec<f64>)> {
        validate_training(data, targets, &self.config)?;
        let batch: Vec<&EmbeddedSample> = data.iter().collect();
        let mut grad = vec![0.0; self.params.len()];
        let mut scratch = Scratch::new(&self.config);
        let loss = self.accumulate(&batch, targets, None, &mut grad, &mut scratch);
        Ok((loss, grad))
    }

    /// Forward and backward pass over a batch, writing the mean gradient into `grad`.
    fn accumulate(
        &self,
        batch: &[&EmbeddedSample],
        targets: &ClassEncodingSet,
        mut dropout: Option<(&mut ChaCha8Rng, f64)>,
        grad: &mut [f64],
        s: &mut Scratch,
    ) -> f64 {
        let l = Layout::of(&self.config);
        grad.fill(0.0);
        let mut total = 0.0;
        for sample in batch {
            let x = &sample.embedding[..];
            let class = match sample.label {
                SampleLabel::Class(c) => c,
                SampleLabel::OutOfScope => unreachable!("validated before training"),
            };
            self.hidden_pre(x, &mut s.pre);
            match dropout.as_mut() {
                Some((rng, rate)) => {
                    let keep = 1.0 / (1.0 - *rate);
                    for m in s.mask.iter_mut() {
                        *m = if rng.random::<f64>() < *rate { 0.0 } else { keep };
                    }
                }
                None => s.mask.fill(1.0),
            }
            for k in 0..l.h {
                s.hidden[k] = s.pre[k].max(0.0) * s.mask[k];
            }
            self.output_pre(&s.hidden, &mut s.logits);

            match self.config.loss {
                Loss::CrossEntropy => {
                    let max = s.logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let sum: f64 = s.logits.iter().map(|a| (a - max).exp()).sum();
                    let lse = max + sum.ln();
                    total += lse - s.logits[class];
                    for j in 0..l.p {
                        let prob = (s.logits[j] - lse).exp();
                        s.d_logits[j] = prob - if j == class { 1.0 } else { 0.0 };
                    }
                }
                Loss::Mse => {
                    let t = targets.vector(class);
                    let scale = 2.0 / l.p as f64;
                    let mut se = 0.0;
                    for ((d, &logit), &target) in s.d_logits.iter_mut().zip(&s.logits).zip(t) {
                        let y = logit.tanh();
                        let diff = y - target;
                        se += diff * diff;
                        *d = scale * diff * (1.0 - y * y);
                    }
                    total += se / l.p as f64;
                }
            }

            // output layer
            s.d_hidden.fill(0.0);
            for j in 0..l.p {
                let d = s.d_logits[j];
                grad[l.b2 + j] += d;
                let row = l.w2 + j * l.h;
                for k in 0..l.h {
                    grad[row + k] += d * s.hidden[k];
                    s.d_hidden[k] += d * self.params[row + k];
                }
            }
            // hidden layer
            for k in 0..l.h {
                if s.pre[k] <= 0.0 || s.mask[k] == 0.0 {
                    continue;
                }
                let d = s.d_hidden[k] * s.mask[k];
                grad[l.b1 + k] += d;
                let row = k * l.n;
                for (i, &xi) in x.iter().enumerate() {
                    grad[row + i] += d * xi;
                }
            }
        }
        let m = batch.len() as f64;
        for g in grad.iter_mut() {
            *g /= m;
        }
        total / m
    }

    /// Writes the text checkpoint: `n h p`, the loss tag, then one section
    /// per matrix (`name rows cols` followed by the rows).
    pub fn to_checkpoint(&self) -> String {
        let l = Layout::of(&self.config);
        let mut out = String::new();
        writeln!(out, "{} {} {}", l.n, l.h, l.p).unwrap();
        writeln!(out, "{}", self.config.loss.tag()).unwrap();
        let sections = [
            ("w1", l.h, l.n, 0),
            ("b1", 1, l.h, l.b1),
            ("w2", l.p, l.h, l.w2),
            ("b2", 1, l.p, l.b2),
        ];
        for (name, rows, cols, offset) in sections {
            writeln!(out, "{name} {rows} {cols}").unwrap();
            for r in 0..rows {
                let row = &self.params[offset + r * cols..offset + (r + 1) * cols];
                let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
                writeln!(out, "{}", cells.join(" ")).unwrap();
            }
        }
        out
    }

    pub fn from_checkpoint(text: &str, origin: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::format(origin, 0, format!("unexpected end of file, expected {what}")))
        };
        let ints = |lineno: usize, line: &str, count: usize| -> Result<Vec<usize>> {
            let v: Vec<usize> = line
                .split_whitespace()
                .map(|s| s.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::format(origin, lineno, "expected integers"))?;
            if v.len() != count {
                return Err(Error::format(origin, lineno, format!("expected {count} integers")));
            }
            Ok(v)
        };

        let (ln, header) = next("header")?;
        let dims = ints(ln, header, 3)?;
        let (ln, tag) = next("loss tag")?;
        let loss = Loss::from_tag(tag).ok_or_else(|| Error::format(origin, ln, format!("unknown loss `{tag}`")))?;
        let mut config = NetworkConfig::new(dims[0], dims[2], loss);
        config.hidden_dim = dims[1];
        config.validate()?;
        let l = Layout::of(&config);

        let mut params = Vec::with_capacity(config.param_count());
        for (name, rows, cols) in [("w1", l.h, l.n), ("b1", 1, l.h), ("w2", l.p, l.h), ("b2", 1, l.p)] {
            let (ln, section) = next(name)?;
            let mut parts = section.split_whitespace();
            if parts.next() != Some(name) {
                return Err(Error::format(origin, ln, format!("expected section `{name}`")));
            }
            let shape = ints(ln, &parts.collect::<Vec<_>>().join(" "), 2)?;
            if shape != [rows, cols] {
                return Err(Error::format(origin, ln, format!("section `{name}` must be {rows}x{cols}")));
            }
            for _ in 0..rows {
                let (ln, row) = next("matrix row")?;
                let values = row
                    .split_whitespace()
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| Error::format(origin, ln, "bad real"))?;
                if values.len() != cols {
                    return Err(Error::format(origin, ln, format!("expected {cols} values")));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::format(origin, ln, "non-finite weight"));
                }
                params.extend(values);
            }
        }
        Ok(Self { config, params })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_checkpoint()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_checkpoint(&text, path)
    }
}

struct Scratch {
    pre: Vec<f64>,
    mask: Vec<f64>,
    hidden: Vec<f64>,
    logits: Vec<f64>,
    d_logits: Vec<f64>,
    d_hidden: Vec<f64>,
}

impl Scratch {
    fn new(config: &NetworkConfig) -> Self {
        let (h, p) = (config.hidden_dim, config.output_dim);
        Self {
            pre: vec![0.0; h],
            mask: vec![1.0; h],
            hidden: vec![0.0; h],
            logits: vec![0.0; p],
            d_logits: vec![0.0; p],
            d_hidden: vec![0.0; h],
        }
    }
}

fn validate_training(data: &[EmbeddedSample], targets: &ClassEncodingSet, config: &NetworkConfig) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Dataset("training data is empty".into()));
    }
    if config.output_dim != targets.dim() {
        return Err(Error::DimensionMismatch {
            expected: targets.dim(),
            actual: config.output_dim,
        });
    }
    if config.loss == Loss::CrossEntropy && targets.family() != EncodingFamily::OneHot {
        return Err(Error::invalid("cross-entropy training requires one-hot targets"));
    }
    for s in data {
        if s.embedding.len() != config.input_dim {
            return Err(Error::DimensionMismatch {
                expected: config.input_dim,
                actual: s.embedding.len(),
            });
        }
        match s.label {
            SampleLabel::Class(c) if c < targets.num_classes() => {}
            SampleLabel::Class(c) => {
                return Err(Error::Dataset(format!(
                    "label {c} out of range for {} classes",
                    targets.num_classes()
                )))
            }
            SampleLabel::OutOfScope => {
                return Err(Error::Dataset("out-of-scope samples cannot be used for training".into()))
            }
        }
    }
    Ok(())
}

/// Adam with β1 = 0.9, β2 = 0.999, ε = 1e-8.
#[derive(Debug, Clone)]
struct Adam {
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(len: usize, lr: f64) -> Self {
        Self {
            lr,
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }

    fn update(&mut self, params: &mut [f64], grad: &[f64]) {
        self.step += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.step);
        let c2 = 1.0 - Self::BETA2.powi(self.step);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * g;
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + Self::EPS);
        }
    }
}

/// Mini-batch Adam trainer. Keeps optimizer state between calls so a model
/// can be trained incrementally against changing targets.
#[derive(Debug, Clone)]
pub struct Trainer {
    model: LikelihoodModel,
    adam: Adam,
    rng: ChaCha8Rng,
}

impl Trainer {
    /// Fresh weights from `config.seed`.
    pub fn new(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let model = LikelihoodModel::init_with(config, &mut rng);
        let adam = Adam::new(model.params.len(), model.config.learning_rate);
        Ok(Self { model, adam, rng })
    }

    pub fn model(&self) -> &LikelihoodModel {
        &self.model
    }

    pub fn into_model(self) -> LikelihoodModel {
        self.model
    }

    /// One pass over `data` in shuffled mini-batches. Returns the mean
    /// per-batch training loss (with dropout active).
    pub fn train_epoch(&mut self, data: &[EmbeddedSample], targets: &ClassEncodingSet) -> Result<f64> {
        validate_training(data, targets, &self.model.config)?;
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut self.rng);

        let rate = self.model.config.dropout_rate;
        let batch_size = self.model.config.batch_size;
        let mut grad = vec![0.0; self.model.params.len()];
        let mut scratch = Scratch::new(&self.model.config);
        let mut losses = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(batch_size) {
            let batch: Vec<&EmbeddedSample> = chunk.iter().map(|&i| &data[i]).collect();
            let dropout = (rate > 0.0).then_some((&mut self.rng, rate));
            let loss = self.model.accumulate(&batch, targets, dropout, &mut grad, &mut scratch);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Divergence(format!("non-finite loss {loss}")));
            }
            self.adam.update(&mut self.model.params, &grad);
            losses += loss;
            batches += 1;
        }
        if self.model.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Divergence("non-finite weights".into()));
        }
        Ok(losses / batches as f64)
    }
}

/// Trains a fresh model for `config.epochs` epochs.
pub fn train_classifier(
    data: &[EmbeddedSample],
    targets: &ClassEncodingSet,
    config: NetworkConfig,
) -> Result<LikelihoodModel> {
    Ok(train_with_history(data, targets, config)?.0)
}

/// Like [`train_classifier`], also returning the per-epoch training loss.
pub fn train_with_history(
    data: &[EmbeddedSample],
    targets: &ClassEncodingSet,
    config: NetworkConfig,
) -> Result<(LikelihoodModel, Vec<f64>)> {
    let epochs = config.epochs;
    let mut trainer = Trainer::new(config)?;
    let history = (0..epochs)
        .map(|_| trainer.train_epoch(data, targets))
        .collect::<Result<Vec<_>>>()?;
    Ok((trainer.into_model(), history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::one_hot_encoding_set;

    fn tiny_config(loss: Loss) -> NetworkConfig {
        NetworkConfig {
            hidden_dim: 4,
            dropout_rate: 0.0,
            ..NetworkConfig::new(3, 2, loss)
        }
    }

    #[test]
    fn zero_network_outputs_zero() {
        let model = LikelihoodModel::zeros(tiny_config(Loss::Mse)).unwrap();
        assert_eq!(model.predict(&[0.3, -2.0, 5.0]).unwrap().values(), &[0.0, 0.0]);
    }

    #[test]
    fn predict_checks_dimension() {
        let model = LikelihoodModel::initialize(tiny_config(Loss::Mse)).unwrap();
        assert!(matches!(
            model.predict(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 3, actual: 2 })
        ));
    }

    #[test]
    fn outputs_stay_in_range_for_extreme_inputs() {
        let model = LikelihoodModel::initialize(tiny_config(Loss::Mse)).unwrap();
        for x in [[1e6, -1e6, 3.0], [0.0, 0.0, 0.0], [-1e3, 1e3, 1e3]] {
            let z = model.predict(&x).unwrap();
            assert!(z.values().iter().all(|v| (-1.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn predict_batch_matches_predict() {
        let model = LikelihoodModel::initialize(tiny_config(Loss::Mse)).unwrap();
        let xs = vec![vec![0.1, 0.2, 0.3], vec![-1.0, 0.5, 2.0], vec![0.0, 0.0, 1.0]];
        assert!(model.predict_batch::<Vec<f64>>(&[]).unwrap().is_empty());
        let one = model.predict_batch(&xs[..1]).unwrap();
        assert_eq!(one, vec![model.predict(&xs[0]).unwrap()]);
        let all = model.predict_batch(&xs).unwrap();
        for (x, z) in xs.iter().zip(&all) {
            let single = model.predict(x).unwrap();
            for (a, b) in z.values().iter().zip(single.values()) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn training_rejects_bad_inputs() {
        let targets = one_hot_encoding_set(2).unwrap();
        let cfg = tiny_config(Loss::CrossEntropy);
        assert!(matches!(train_classifier(&[], &targets, cfg.clone()), Err(Error::Dataset(_))));
        let oos = [EmbeddedSample::oos(vec![0.0; 3])];
        assert!(train_classifier(&oos, &targets, cfg.clone()).is_err());
        let bad_label = [EmbeddedSample::class(vec![0.0; 3], 5)];
        assert!(train_classifier(&bad_label, &targets, cfg.clone()).is_err());
        let bad_dim = [EmbeddedSample::class(vec![0.0; 2], 0)];
        assert!(train_classifier(&bad_dim, &targets, cfg).is_err());

        let dense = crate::encoding::random_encoding_set(2, 2, 1).unwrap();
        let ok = [EmbeddedSample::class(vec![0.0; 3], 0)];
        assert!(train_classifier(&ok, &dense, tiny_config(Loss::CrossEntropy)).is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let targets = one_hot_encoding_set(2).unwrap();
        let data = [EmbeddedSample::class(vec![f64::MAX, f64::MAX, f64::MAX], 0)];
        let err = train_classifier(&data, &targets, tiny_config(Loss::CrossEntropy)).unwrap_err();
        assert!(matches!(err, Error::Divergence(_)));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let model = LikelihoodModel::initialize(tiny_config(Loss::CrossEntropy)).unwrap();
        let text = model.to_checkpoint();
        let back = LikelihoodModel::from_checkpoint(&text, Path::new("ckpt")).unwrap();
        assert_eq!(back.parameters(), model.parameters());
        assert_eq!(back.config().loss, Loss::CrossEntropy);
        assert_eq!(back.config().hidden_dim, 4);
    }

    #[test]
    fn checkpoint_rejects_truncation() {
        let model = LikelihoodModel::initialize(tiny_config(Loss::Mse)).unwrap();
        let text = model.to_checkpoint();
        let cut: String = text.lines().take(6).collect::<Vec<_>>().join("\n");
        assert!(LikelihoodModel::from_checkpoint(&cut, Path::new("ckpt")).is_err());
    }
}
