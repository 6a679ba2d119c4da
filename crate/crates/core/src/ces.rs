//! Class encoding search.
//!
//! Each iteration fits the network to project training inputs onto their
//! class vectors (mean squared error), evaluates FAR and ISER on a held-out
//! set containing OOS inputs, then pushes every class vector away from the
//! others by a step of size λ along the sum of unit repulsion directions.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::encoding::{ClassDecision, ClassEncodingSet, DecisionRule, EncodingFamily, ThresholdPolicy, ThresholdSemantics};
use crate::error::{Error, Result};
use crate::metrics::{compute_eer, far, score_samples};
use crate::model::{EmbeddedSample, Loss, NetworkConfig, SampleLabel, Trainer};

/// Componentwise mean of equal-length vectors.
pub fn mean_vector<V: AsRef<[f64]>>(vectors: &[V]) -> Result<Vec<f64>> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::invalid("mean of an empty set"))?
        .as_ref();
    let mut sum = vec![0.0; first.len()];
    for v in vectors {
        let v = v.as_ref();
        if v.len() != sum.len() {
            return Err(Error::DimensionMismatch {
                expected: sum.len(),
                actual: v.len(),
            });
        }
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x;
        }
    }
    let n = vectors.len() as f64;
    Ok(sum.into_iter().map(|s| s / n).collect())
}

/// Unit direction used to separate two coincident class vectors; `i < j`
/// gets `u`, `i > j` gets `-u`.
fn tie_direction(i: usize, j: usize, dim: usize) -> Vec<f64> {
    let (lo, hi) = (i.min(j) as u64, i.max(j) as u64);
    let mut rng = ChaCha8Rng::seed_from_u64((lo << 32) ^ hi ^ 0x5eed);
    let mut u: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let sign = if i < j { 1.0 } else { -1.0 };
    for x in u.iter_mut() {
        *x *= sign / norm;
    }
    u
}

/// One repulsion step: `r_i ← clamp(r_i + λ Σ_{j≠i} (r_i − r_j)/‖r_i − r_j‖)`,
/// all vectors updated from the same previous set.
pub fn repulsion_update(set: &ClassEncodingSet, lambda: f64) -> Result<ClassEncodingSet> {
    if set.family() != EncodingFamily::Dense {
        return Err(Error::invalid("repulsion applies to dense encodings only"));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::invalid(format!("step size {lambda} must be finite and >= 0")));
    }
    let vs = set.vectors();
    let dim = set.dim();
    let mut next = vs.to_vec();
    for (i, out) in next.iter_mut().enumerate() {
        let mut push = vec![0.0; dim];
        for (j, other) in vs.iter().enumerate() {
            if i == j {
                continue;
            }
            let diff: Vec<f64> = vs[i].iter().zip(other).map(|(a, b)| a - b).collect();
            let norm = diff.iter().map(|x| x * x).sum::<f64>().sqrt();
            let dir = if norm > 0.0 {
                diff.into_iter().map(|x| x / norm).collect()
            } else {
                tie_direction(i, j, dim)
            };
            for (p, d) in push.iter_mut().zip(dir) {
                *p += d;
            }
        }
        for (x, p) in out.iter_mut().zip(push) {
            *x = (*x + lambda * p).clamp(-1.0, 1.0);
        }
    }
    ClassEncodingSet::new(next, EncodingFamily::Dense, set.class_names().to_vec())
}

/// Moves each class vector toward the mean projection of its training inputs.
fn attraction_update(set: &ClassEncodingSet, means: &[Option<Vec<f64>>], lambda: f64) -> Result<ClassEncodingSet> {
    let next = set
        .vectors()
        .iter()
        .zip(means)
        .map(|(r, mean)| match mean {
            Some(m) => r.iter().zip(m).map(|(x, mu)| (x + lambda * (mu - x)).clamp(-1.0, 1.0)).collect(),
            None => r.clone(),
        })
        .collect();
    ClassEncodingSet::new(next, EncodingFamily::Dense, set.class_names().to_vec())
}

/// How FAR is measured at each iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FarMode {
    /// At the equal-error-rate threshold of that iteration.
    AtEer,
    /// At a fixed distance ceiling.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CesConfig {
    pub iterations: usize,
    pub lambda: f64,
    pub restart_weights: bool,
    /// Epochs of network training per iteration.
    pub inner_epochs: usize,
    pub seed: u64,
    pub attraction_enabled: bool,
    pub far_mode: FarMode,
    /// Architecture and optimizer settings; `loss`, `output_dim`, `epochs`
    /// and `seed` are overridden by the search.
    pub network: NetworkConfig,
}

impl CesConfig {
    /// 1000 iterations, λ = 0.0001, weights restarted every iteration with
    /// 50 epochs each.
    pub fn new(network: NetworkConfig) -> Self {
        Self {
            iterations: 1000,
            lambda: 1e-4,
            restart_weights: true,
            inner_epochs: 50,
            seed: 0,
            attraction_enabled: false,
            far_mode: FarMode::AtEer,
            network,
        }
    }

    /// Sets `restart_weights` and the matching default epoch budget
    /// (50 per iteration when restarting, 1 when carrying weights forward).
    pub fn with_restart(mut self, restart: bool) -> Self {
        self.restart_weights = restart;
        self.inner_epochs = if restart { 50 } else { 1 };
        self
    }

    fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.inner_epochs == 0 {
            return Err(Error::invalid("iterations and inner epochs must be >= 1"));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::invalid(format!("lambda {} must be finite and >= 0", self.lambda)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CesRecord {
    pub iteration: usize,
    pub far: f64,
    pub iser: f64,
    /// FNV-1a hash of the encoding the network was fit to at this iteration.
    pub encoding_hash: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestEncoding {
    pub value: f64,
    pub iteration: usize,
    pub encoding: ClassEncodingSet,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CesTrace {
    pub records: Vec<CesRecord>,
    /// Lowest FAR seen (earliest iteration on ties).
    pub best_far: Option<BestEncoding>,
    /// Lowest ISER seen (earliest iteration on ties).
    pub best_iser: Option<BestEncoding>,
}

impl CesTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Running minimum of FAR after each iteration.
    pub fn best_far_so_far(&self) -> Vec<f64> {
        self.records
            .iter()
            .scan(f64::INFINITY, |best, r| {
                *best = best.min(r.far);
                Some(*best)
            })
            .collect()
    }

    fn push(&mut self, record: CesRecord, encoding: &ClassEncodingSet) {
        let improves = |best: &Option<BestEncoding>, value: f64| best.as_ref().is_none_or(|b| value < b.value);
        if improves(&self.best_far, record.far) {
            self.best_far = Some(BestEncoding {
                value: record.far,
                iteration: record.iteration,
                encoding: encoding.clone(),
            });
        }
        if improves(&self.best_iser, record.iser) {
            self.best_iser = Some(BestEncoding {
                value: record.iser,
                iteration: record.iteration,
                encoding: encoding.clone(),
            });
        }
        self.records.push(record);
    }

    /// CSV with header `iteration,far,iser`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,far,iser\n");
        for r in &self.records {
            writeln!(out, "{},{},{}", r.iteration, r.far, r.iser).unwrap();
        }
        out
    }

    /// Writes `trace.csv` plus the best-FAR and best-ISER encodings
    /// (`best_far_iter<k>.txt`, `best_iser_iter<k>.txt`) into `dir`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        let trace_path = dir.join("trace.csv");
        fs::write(&trace_path, self.to_csv()).map_err(|e| Error::io(&trace_path, e))?;
        written.push(trace_path);
        for (tag, best) in [("far", &self.best_far), ("iser", &self.best_iser)] {
            if let Some(b) = best {
                let path = dir.join(format!("best_{tag}_iter{}.txt", b.iteration));
                crate::encoding::save_encoding_set(&b.encoding, &path)?;
                written.push(path);
            }
        }
        Ok(written)
    }
}

/// A search that stopped early; `trace` holds the iterations completed.
#[derive(Debug, thiserror::Error)]
#[error("class encoding search stopped after {} iterations: {cause}", trace.len())]
pub struct CesAborted {
    pub trace: CesTrace,
    #[source]
    pub cause: Error,
}

pub fn encoding_hash(set: &ClassEncodingSet) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for x in set.vectors().iter().flatten() {
        for b in x.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// Runs the search from `initial`. Iteration `t`:
///
/// 1. when `restart_weights` (or `t = 0`) start from fresh weights seeded
///    with `seed + t`, otherwise continue from the previous weights;
/// 2. train `inner_epochs` epochs of MSE toward the current class vectors;
/// 3. record FAR and ISER of the network against those class vectors;
/// 4. update the class vectors by repulsion (and attraction, if enabled).
pub fn ces_search(
    train: &[EmbeddedSample],
    eval: &[EmbeddedSample],
    initial: &ClassEncodingSet,
    config: &CesConfig,
) -> Result<CesTrace, Box<CesAborted>> {
    let abort = |trace: CesTrace, cause: Error| Box::new(CesAborted { trace, cause });
    if let Err(e) = validate_search(eval, initial, config) {
        return Err(abort(CesTrace::default(), e));
    }

    let mut network = config.network.clone();
    network.loss = Loss::Mse;
    network.output_dim = initial.dim();

    let mut trace = CesTrace::default();
    let mut encoding = initial.clone();
    let mut trainer: Option<Trainer> = None;
    for t in 0..config.iterations {
        let step = (|| -> Result<ClassEncodingSet> {
            if config.restart_weights || trainer.is_none() {
                let mut cfg = network.clone();
                cfg.seed = config.seed.wrapping_add(t as u64);
                trainer = Some(Trainer::new(cfg)?);
            }
            let tr = trainer.as_mut().expect("initialized above");
            for _ in 0..config.inner_epochs {
                tr.train_epoch(train, &encoding)?;
            }
            let model = tr.model();

            let rule = DecisionRule::Dense(encoding.clone());
            let scored = score_samples(model, &rule, eval)?;
            let report = compute_eer(&scored, ThresholdSemantics::DistanceCeiling)?;
            let far_value = match config.far_mode {
                FarMode::AtEer => report.far_at_theta,
                FarMode::Fixed(theta) => {
                    let policy = ThresholdPolicy::distance_ceiling(theta)?;
                    let decisions: Vec<ClassDecision> = scored
                        .iter()
                        .map(|s| {
                            if policy.accepts(-s.score) {
                                ClassDecision::InScope(s.predicted_class)
                            } else {
                                ClassDecision::OutOfScope
                            }
                        })
                        .collect();
                    let truths: Vec<SampleLabel> = scored.iter().map(|s| s.true_class).collect();
                    far(&decisions, &truths)?
                }
            };
            trace.push(
                CesRecord {
                    iteration: t,
                    far: far_value,
                    iser: report.iser,
                    encoding_hash: encoding_hash(&encoding),
                },
                &encoding,
            );

            let mut next = repulsion_update(&encoding, config.lambda)?;
            if config.attraction_enabled {
                let means = class_projection_means(model, train, encoding.num_classes())?;
                next = attraction_update(&next, &means, config.lambda)?;
            }
            Ok(next)
        })();
        match step {
            Ok(next) => encoding = next,
            Err(cause) => return Err(abort(trace, cause)),
        }
    }
    Ok(trace)
}

fn validate_search(eval: &[EmbeddedSample], initial: &ClassEncodingSet, config: &CesConfig) -> Result<()> {
    config.validate()?;
    if initial.family() != EncodingFamily::Dense {
        return Err(Error::invalid("class encoding search starts from a dense encoding"));
    }
    let has_oos = eval.iter().any(|s| s.label == SampleLabel::OutOfScope);
    let has_is = eval.iter().any(|s| matches!(s.label, SampleLabel::Class(_)));
    if !(has_oos && has_is) {
        return Err(Error::Dataset("evaluation set needs in-scope and out-of-scope samples".into()));
    }
    Ok(())
}

fn class_projection_means(
    model: &crate::model::LikelihoodModel,
    train: &[EmbeddedSample],
    classes: usize,
) -> Result<Vec<Option<Vec<f64>>>> {
    let mut per_class: Vec<Vec<Vec<f64>>> = vec![Vec::new(); classes];
    for s in train {
        if let SampleLabel::Class(c) = s.label {
            per_class[c].push(model.predict(&s.embedding)?.into_inner());
        }
    }
    per_class
        .iter()
        .map(|xs| if xs.is_empty() { Ok(None) } else { mean_vector(xs).map(Some) })
        .collect()
}
