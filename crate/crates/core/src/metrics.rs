//! False acceptance / false rejection rates, in-scope error rate and the
//! equal-error-rate threshold sweep.

use std::io::Write;

use crate::encoding::{ClassDecision, DecisionRule, ThresholdSemantics};
use crate::error::{Error, Result};
use crate::model::{EmbeddedSample, LikelihoodModel, SampleLabel};

fn check_lengths(decisions: &[ClassDecision], truths: &[SampleLabel]) -> Result<()> {
    if decisions.len() != truths.len() {
        return Err(Error::DimensionMismatch {
            expected: truths.len(),
            actual: decisions.len(),
        });
    }
    Ok(())
}

/// Fraction of out-of-scope samples that were accepted as some class.
pub fn far(decisions: &[ClassDecision], truths: &[SampleLabel]) -> Result<f64> {
    check_lengths(decisions, truths)?;
    let (mut oos, mut accepted) = (0usize, 0usize);
    for (d, t) in decisions.iter().zip(truths) {
        if *t == SampleLabel::OutOfScope {
            oos += 1;
            accepted += d.is_in_scope() as usize;
        }
    }
    if oos == 0 {
        return Err(Error::Dataset("FAR needs at least one out-of-scope sample".into()));
    }
    Ok(accepted as f64 / oos as f64)
}

/// Fraction of in-scope samples that were rejected as out-of-scope.
pub fn frr(decisions: &[ClassDecision], truths: &[SampleLabel]) -> Result<f64> {
    check_lengths(decisions, truths)?;
    let (mut is, mut rejected) = (0usize, 0usize);
    for (d, t) in decisions.iter().zip(truths) {
        if matches!(t, SampleLabel::Class(_)) {
            is += 1;
            rejected += (!d.is_in_scope()) as usize;
        }
    }
    if is == 0 {
        return Err(Error::Dataset("FRR needs at least one in-scope sample".into()));
    }
    Ok(rejected as f64 / is as f64)
}

/// Misclassification rate of in-scope samples with rejection disabled.
pub fn iser_from_predictions(predicted: &[usize], truths: &[usize]) -> Result<f64> {
    if predicted.len() != truths.len() {
        return Err(Error::DimensionMismatch {
            expected: truths.len(),
            actual: predicted.len(),
        });
    }
    if truths.is_empty() {
        return Err(Error::Dataset("ISER needs at least one in-scope sample".into()));
    }
    let wrong = predicted.iter().zip(truths).filter(|(p, t)| p != t).count();
    Ok(wrong as f64 / truths.len() as f64)
}

/// ISER of a model under a decision rule. Out-of-scope samples in `samples`
/// are skipped.
pub fn iser(model: &LikelihoodModel, rule: &DecisionRule, samples: &[EmbeddedSample]) -> Result<f64> {
    let mut predicted = Vec::new();
    let mut truths = Vec::new();
    for s in samples {
        if let SampleLabel::Class(c) = s.label {
            predicted.push(rule.evaluate(&model.predict(&s.embedding)?)?.class);
            truths.push(c);
        }
    }
    iser_from_predictions(&predicted, &truths)
}

/// One evaluated input. `score` is oriented so larger means more in-scope
/// (the rule statistic for score floors, its negation for distance ceilings).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredSample {
    pub score: f64,
    pub is_oos: bool,
    /// Decision at θ = 0, defined even for samples that end up rejected.
    pub predicted_class: usize,
    pub true_class: SampleLabel,
}

impl ScoredSample {
    pub fn new(score: f64, predicted_class: usize, true_class: SampleLabel) -> Self {
        Self {
            score,
            is_oos: true_class == SampleLabel::OutOfScope,
            predicted_class,
            true_class,
        }
    }
}

/// Scores every sample of an evaluation set with `model` and `rule`.
pub fn score_samples(
    model: &LikelihoodModel,
    rule: &DecisionRule,
    samples: &[EmbeddedSample],
) -> Result<Vec<ScoredSample>> {
    samples
        .iter()
        .map(|s| {
            let out = rule.evaluate(&model.predict(&s.embedding)?)?;
            Ok(ScoredSample::new(rule.acceptance_score(out.statistic), out.class, s.label))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub theta: f64,
    pub far: f64,
    pub frr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub eer: f64,
    /// Threshold in the rule's own units (score floor or distance ceiling).
    pub theta_star: f64,
    pub far_at_theta: f64,
    pub frr_at_theta: f64,
    pub iser: f64,
    /// Sweep points sorted by ascending θ.
    pub curve: Vec<CurvePoint>,
    /// Name of the data split the report was computed on.
    pub split: String,
}

impl EvaluationReport {
    pub fn with_split(mut self, split: impl Into<String>) -> Self {
        self.split = split.into();
        self
    }

    pub fn write_curve_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["theta", "far", "frr"])?;
        for p in &self.curve {
            w.write_record([p.theta.to_string(), p.far.to_string(), p.frr.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<curve csv>", e))?;
        Ok(())
    }

    pub fn curve_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_curve_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

/// Sweeps θ over every observed score (plus one sentinel on each side) and
/// picks the threshold where FAR and FRR are closest, preferring the smaller
/// θ on ties. The EER is the mean of FAR and FRR there.
///
/// `semantics` says how a threshold is applied: under a score floor a sample
/// is accepted when its score is strictly above θ; under a distance ceiling
/// when its distance (the negated score) is at most θ.
pub fn compute_eer(scored: &[ScoredSample], semantics: ThresholdSemantics) -> Result<EvaluationReport> {
    if scored.iter().any(|s| !s.score.is_finite()) {
        return Err(Error::invalid("scores must be finite"));
    }
    let native = |s: &ScoredSample| match semantics {
        ThresholdSemantics::ScoreFloor => s.score,
        ThresholdSemantics::DistanceCeiling => -s.score,
    };
    let mut is_vals: Vec<f64> = scored.iter().filter(|s| !s.is_oos).map(native).collect();
    let mut oos_vals: Vec<f64> = scored.iter().filter(|s| s.is_oos).map(native).collect();
    if is_vals.is_empty() || oos_vals.is_empty() {
        return Err(Error::Dataset("EER needs both in-scope and out-of-scope samples".into()));
    }
    is_vals.sort_by(f64::total_cmp);
    oos_vals.sort_by(f64::total_cmp);

    let mut thetas: Vec<f64> = is_vals.iter().chain(&oos_vals).copied().collect();
    thetas.sort_by(f64::total_cmp);
    thetas.dedup();
    let (lo, hi) = (thetas[0] - 1.0, thetas[thetas.len() - 1] + 1.0);
    thetas.insert(0, lo);
    thetas.push(hi);

    // number of values accepted at θ
    let accepted = |vals: &[f64], theta: f64| match semantics {
        ThresholdSemantics::ScoreFloor => vals.len() - vals.partition_point(|&v| v <= theta),
        ThresholdSemantics::DistanceCeiling => vals.partition_point(|&v| v <= theta),
    };

    let (n_is, n_oos) = (is_vals.len(), oos_vals.len());
    let mut curve = Vec::with_capacity(thetas.len());
    let mut best: Option<(usize, u128, usize, usize)> = None;
    for (idx, &theta) in thetas.iter().enumerate() {
        let fa = accepted(&oos_vals, theta);
        let fr = n_is - accepted(&is_vals, theta);
        curve.push(CurvePoint {
            theta,
            far: fa as f64 / n_oos as f64,
            frr: fr as f64 / n_is as f64,
        });
        // |fa/n_oos - fr/n_is| scaled by n_oos * n_is, compared exactly
        let gap = (fa as i128 * n_is as i128 - fr as i128 * n_oos as i128).unsigned_abs();
        if best.is_none_or(|(_, g, _, _)| gap < g) {
            best = Some((idx, gap, fa, fr));
        }
    }
    let (idx, _, fa, fr) = best.expect("at least two sweep points");
    let at = curve[idx];
    // (fa/n_oos + fr/n_is) / 2 with a single rounding
    let eer = (fa * n_is + fr * n_oos) as f64 / (2 * n_is * n_oos) as f64;

    let mut wrong = 0usize;
    for s in scored.iter().filter(|s| !s.is_oos) {
        if s.true_class != SampleLabel::Class(s.predicted_class) {
            wrong += 1;
        }
    }

    Ok(EvaluationReport {
        eer,
        theta_star: at.theta,
        far_at_theta: at.far,
        frr_at_theta: at.frr,
        iser: wrong as f64 / n_is as f64,
        curve,
        split: "evaluation".into(),
    })
}
