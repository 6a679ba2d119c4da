//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.
//!
//! `cargo test --release --test acceptance [-- <criterion numbers>]`

use std::collections::BTreeSet;
use std::fs;
use std::time::{Duration, Instant};

use oos_encoding::ces::{ces_search, CesConfig};
use oos_encoding::encoding::{
    classify_dense, classify_one_hot_distance, one_hot_encoding_set, random_encoding_set, DecisionRule,
    LikelihoodVector, ThresholdPolicy, ThresholdSemantics,
};
use oos_encoding::harness::{
    emit_report, hash_featurize, parse_hint3, run_embedded, run_experiment, save_embedding_file, Algorithm,
    EmbeddingSource, EmbeddingTable, ExperimentConfig, GaussianBenchmark, ReportFormat, HINT3_OOS_MARKER,
};
use oos_encoding::metrics::{compute_eer, ScoredSample};
use oos_encoding::model::{
    train_classifier, EmbeddedSample, LikelihoodModel, Loss, NetworkConfig, SampleLabel,
};
use oos_encoding::topology::{
    enumerate_signatures, signature_for, survey_dense, sweep_signatures, DecisionFamily, GridSpec, TopologySignature,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (usize, &'static str, fn() -> Outcome);

fn check(cond: bool, ok: impl Into<String>, fail: impl Into<String>) -> Outcome {
    if cond {
        Ok(ok.into())
    } else {
        Err(fail.into())
    }
}

fn within(elapsed: Duration, limit: Duration, what: &str) -> Outcome {
    check(
        elapsed < limit,
        format!("{what} in {elapsed:.1?}"),
        format!("{what} took {elapsed:.1?}, limit {limit:?}"),
    )
}

fn sweep(from: f64, to: f64, step: f64) -> Vec<f64> {
    let n = ((to - from) / step).round() as usize;
    (0..=n).map(|i| from + i as f64 * step).collect()
}

fn grid_for(c: usize) -> GridSpec {
    GridSpec::default_for(c).expect("2 or 3")
}

/// Locates every signature change along `thetas` to within `tol` by
/// bisection.
fn change_points(rule: &DecisionRule, thetas: &[f64], grid: &GridSpec, tol: f64) -> Vec<f64> {
    let sig = |t: f64| signature_for(rule, t, grid).expect("valid rule");
    let sigs: Vec<TopologySignature> = thetas.iter().map(|&t| sig(t)).collect();
    let mut out = Vec::new();
    for i in 1..thetas.len() {
        if sigs[i] != sigs[i - 1] {
            let (mut lo, mut hi) = (thetas[i - 1], thetas[i]);
            let lo_sig = sigs[i - 1].clone();
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if sig(mid) == lo_sig {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
    }
    out
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let thetas = sweep(0.05, 0.95, 0.05);
    let mut counts = Vec::new();
    for c in [2, 3] {
        counts.push(enumerate_signatures(&DecisionFamily::Max, &thetas, &grid_for(c)).map_err(|e| e.to_string())?.len());
    }
    check(
        counts == [1, 1],
        "max rule: 1 signature for c=2 and c=3",
        format!("max rule signature counts {counts:?}, expected [1, 1]"),
    )?;
    within(start.elapsed(), Duration::from_secs(60), "max rule sweep")
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    // θ above the largest achievable softmax would reject everything
    for (c, top, expected) in [(2usize, 0.85, vec![0.5]), (3, 0.75, vec![1.0 / 3.0, 0.5])] {
        let grid = grid_for(c);
        let thetas = sweep(0.05, top, 0.05);
        let n = enumerate_signatures(&DecisionFamily::Softmax, &thetas, &grid)
            .map_err(|e| e.to_string())?
            .len();
        let tol = 2.0 / grid.resolution() as f64;
        // On [-1, 1]^c two classes stop touching once θ exceeds the softmax of
        // (1, 1, -1, ..., -1), i.e. 1/(2 + (c−2)e^-2), which is 1/2 only for c = 2.
        let bounded = 1.0 / (2.0 + (c as f64 - 2.0) * (-2.0f64).exp());
        let changes = change_points(&DecisionRule::Softmax { classes: c }, &thetas, &grid, 1e-4);
        let located = changes.len() == expected.len()
            && changes.iter().zip(&expected).all(|(got, want)| (got - want).abs() <= tol);
        check(
            n == c && located,
            "",
            format!(
                "softmax c={c}: {n} signatures, changes at {changes:.4?}, expected {c} with changes at {expected:.4?} ± {tol}; \
                 bounded-domain separation threshold {bounded:.4}"
            ),
        )?;
        notes.push(format!("c={c}: {n} signatures, changes at {changes:.4?}"));
    }
    within(start.elapsed(), Duration::from_secs(120), &notes.join("; "))
}

fn criterion_3() -> Outcome {
    let grid = grid_for(2);
    let thetas = sweep(0.05, 0.95, 0.05);
    let oos_at = |family: DecisionFamily, theta: f64| -> usize {
        sweep_signatures(&family, &[theta], &grid).expect("valid")[0].1.oos_components()
    };
    // planar analysis: class regions are discs of radius 1 − θ
    let complement = DecisionFamily::OneHotDistanceComplement;
    let (c02, c04) = (oos_at(complement, 0.2), oos_at(complement, 0.4));
    let forbidden = |family: DecisionFamily| -> Vec<f64> {
        sweep_signatures(&family, &thetas, &grid)
            .expect("valid")
            .into_iter()
            .filter(|(_, s)| s.classes_connected_with_single_oos())
            .map(|(t, _)| t)
            .collect()
    };
    let bad_complement = forbidden(complement);
    // distance ceiling applied literally (radius θ): the same split mirrored to θ ↦ 1 − θ
    let literal = DecisionFamily::OneHotDistance;
    let (l08, l06, l02) = (oos_at(literal, 0.8), oos_at(literal, 0.6), oos_at(literal, 0.2));
    let bad_literal = forbidden(literal);
    check(
        c02 == 2 && c04 == 1 && bad_complement.is_empty() && l08 == 2 && l06 == 1 && bad_literal.is_empty(),
        format!(
            "radius 1−θ: {c02} OOS at θ=0.2, {c04} at θ=0.4; ceiling θ: {l08} at 0.8, {l06} at 0.6, {l02} at 0.2; forbidden signature never seen"
        ),
        format!(
            "radius 1−θ: {c02} OOS at θ=0.2, {c04} at θ=0.4, forbidden at {bad_complement:?}; \
             ceiling θ: {l08} at 0.8, {l06} at 0.6, forbidden at {bad_literal:?}"
        ),
    )
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let grid = grid_for(2);
    let draws = 10_000u64;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let encodings: Vec<_> = (0..draws)
        .map(|k| random_encoding_set(2, 2, 1_000 + k))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let thetas: Vec<f64> = (0..draws).map(|_| rng.random_range(0.0..1.5)).collect();
    let survey = survey_dense(encodings.iter().zip(thetas.iter().copied()), &grid).map_err(|e| e.to_string())?;
    let oos_counts: BTreeSet<usize> = survey.keys().map(TopologySignature::oos_components).collect();
    let one_class_touch = survey.keys().any(TopologySignature::has_oos_component_touching_one_class);
    let n = survey.len();
    check(
        n >= 12 && (1..=4).all(|k| oos_counts.contains(&k)) && one_class_touch,
        format!("{n} signatures over {draws} draws, OOS component counts {oos_counts:?}, one-class OOS component present"),
        format!("{n} signatures, OOS counts {oos_counts:?}, one-class OOS component: {one_class_touch}"),
    )?;
    within(start.elapsed(), Duration::from_secs(600), &format!("{n} signatures, OOS counts {oos_counts:?}"))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..1000 {
        let n_is = rng.random_range(1..60);
        let n_oos = rng.random_range(1..60);
        let semantics = if trial % 2 == 0 {
            ThresholdSemantics::ScoreFloor
        } else {
            ThresholdSemantics::DistanceCeiling
        };
        let shift: f64 = rng.random_range(-0.5..0.5);
        let mut scored: Vec<ScoredSample> = (0..n_is)
            .map(|_| ScoredSample::new(rng.random::<f64>() + shift, 0, SampleLabel::Class(0)))
            .collect();
        scored.extend((0..n_oos).map(|_| ScoredSample::new(rng.random::<f64>(), 0, SampleLabel::OutOfScope)));
        let r = compute_eer(&scored, semantics).map_err(|e| e.to_string())?;
        let bound = (1.0 / n_is as f64).max(1.0 / n_oos as f64);
        let gap = (r.far_at_theta - r.frr_at_theta).abs();
        if gap > bound + 1e-12 {
            return Err(format!("trial {trial}: |FAR − FRR| = {gap} > {bound}"));
        }
    }
    let worked: Vec<ScoredSample> = [0.1, 0.2, 0.6]
        .iter()
        .map(|&d| ScoredSample::new(-d, 0, SampleLabel::Class(0)))
        .chain([0.3, 0.7].iter().map(|&d| ScoredSample::new(-d, 0, SampleLabel::OutOfScope)))
        .collect();
    let eer = compute_eer(&worked, ThresholdSemantics::DistanceCeiling).map_err(|e| e.to_string())?.eer;
    check(
        eer == 5.0 / 12.0,
        "1000 fuzzed sets within bound; worked example EER = 5/12",
        format!("worked example EER {eer}, expected 5/12"),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let sets: Vec<_> = (2..=10).map(|p| one_hot_encoding_set(p).expect("p >= 2")).collect();
    for i in 0..100_000 {
        let p = rng.random_range(2..=10);
        let z = LikelihoodVector::new((0..p).map(|_| rng.random_range(-1.0..=1.0)).collect()).expect("finite");
        let theta = rng.random_range(0.0..2.5);
        let policy = ThresholdPolicy::distance_ceiling(theta).expect("valid");
        let dense = classify_dense(&z, &sets[p - 2], &policy).map_err(|e| e.to_string())?;
        let one_hot = classify_one_hot_distance(&z, &policy).map_err(|e| e.to_string())?;
        if dense != one_hot {
            return Err(format!("draw {i}: dense {dense:?} vs one-hot {one_hot:?} for {:?}, θ={theta}", z.values()));
        }
    }
    for i in 0..100_000 {
        let p = rng.random_range(2..=10);
        let scale = if i % 2 == 0 { 1.0 } else { 50.0 };
        let z = LikelihoodVector::new((0..p).map(|_| rng.random_range(-scale..=scale)).collect()).expect("finite");
        let a = DecisionRule::Max { classes: p }.evaluate(&z).map_err(|e| e.to_string())?.class;
        let b = DecisionRule::Softmax { classes: p }.evaluate(&z).map_err(|e| e.to_string())?.class;
        if a != b {
            return Err(format!("draw {i}: argmax {a} vs softmax argmax {b} for {:?}", z.values()));
        }
    }
    Ok("10^5 dense/one-hot distance draws agree; 10^5 argmax/softmax draws agree".into())
}

fn tiny_network(loss: Loss) -> NetworkConfig {
    NetworkConfig {
        hidden_dim: 4,
        dropout_rate: 0.1,
        batch_size: 4,
        epochs: 5,
        seed: 7,
        ..NetworkConfig::new(3, 2, loss)
    }
}

fn tiny_data() -> Vec<EmbeddedSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(70);
    (0..12)
        .map(|i| EmbeddedSample::class((0..3).map(|_| rng.random_range(-1.0..1.0)).collect(), i % 2))
        .collect()
}

fn criterion_7() -> Outcome {
    let data = tiny_data();
    let mut worst: f64 = 0.0;
    for (loss, targets) in [
        (Loss::CrossEntropy, one_hot_encoding_set(2).expect("c=2")),
        (Loss::Mse, random_encoding_set(2, 2, 3).expect("valid")),
    ] {
        let model = LikelihoodModel::initialize(tiny_network(loss)).map_err(|e| e.to_string())?;
        let (_, grad) = model.loss_and_gradient(&data, &targets).map_err(|e| e.to_string())?;
        let h = 1e-5;
        for (i, g) in grad.iter().enumerate() {
            let mut plus = model.clone();
            plus.parameters_mut()[i] += h;
            let mut minus = model.clone();
            minus.parameters_mut()[i] -= h;
            let numeric = (plus.loss(&data, &targets).map_err(|e| e.to_string())?
                - minus.loss(&data, &targets).map_err(|e| e.to_string())?)
                / (2.0 * h);
            let scale = g.abs().max(numeric.abs());
            let rel = if scale < 1e-8 { 0.0 } else { (g - numeric).abs() / scale };
            worst = worst.max(rel);
        }
    }
    check(worst <= 1e-4, "", format!("worst relative gradient error {worst:e} > 1e-4"))?;
    let targets = one_hot_encoding_set(2).expect("c=2");
    let a = train_classifier(&data, &targets, tiny_network(Loss::CrossEntropy)).map_err(|e| e.to_string())?;
    let b = train_classifier(&data, &targets, tiny_network(Loss::CrossEntropy)).map_err(|e| e.to_string())?;
    let identical = a
        .parameters()
        .iter()
        .zip(b.parameters())
        .all(|(x, y)| x.to_bits() == y.to_bits());
    check(
        identical,
        format!("worst relative gradient error {worst:.2e}; seeded training bit-identical"),
        "two seeded training runs differ",
    )
}

fn benchmark_network() -> NetworkConfig {
    NetworkConfig::new(8, 2, Loss::CrossEntropy)
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let data = GaussianBenchmark::default().generate(0).map_err(|e| e.to_string())?;
    let mut config = ExperimentConfig::new(
        vec![Algorithm::OneHotSoftmax, Algorithm::RandomDense],
        vec![8],
        EmbeddingSource::Hashed { dim: 8 },
    );
    config.samples_per_n = 100;
    config.network = benchmark_network();
    let table = run_embedded(&data, &config).map_err(|e| e.to_string())?;
    let baseline = table.baseline().expect("row").runs[0];
    let dense = table.row(Algorithm::RandomDense, 8).expect("row");
    let best = dense.best_far_run();
    let iser_ok = best.iser <= baseline.iser * 1.1;
    check(
        dense.far.min < baseline.far && iser_ok,
        "",
        format!(
            "min R(8) FAR {:.3} vs softmax FAR {:.3}; best-encoding ISER {:.3} vs softmax ISER {:.3}",
            dense.far.min, baseline.far, best.iser, baseline.iser
        ),
    )?;
    within(
        start.elapsed(),
        Duration::from_secs(900),
        &format!(
            "min R(8) FAR {:.3} < softmax FAR {:.3}; ISER {:.3} vs {:.3}",
            dense.far.min, baseline.far, best.iser, baseline.iser
        ),
    )
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let data = GaussianBenchmark::default().generate(0).map_err(|e| e.to_string())?;
    let initial = random_encoding_set(2, 8, 1).map_err(|e| e.to_string())?;
    let mut config = CesConfig::new(NetworkConfig::new(8, 8, Loss::Mse)).with_restart(true);
    config.iterations = 200;
    config.lambda = 1e-4;
    let trace = ces_search(&data.train, &data.test, &initial, &config).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    trace.write_to(dir.path()).map_err(|e| e.to_string())?;
    let csv = fs::read_to_string(dir.path().join("trace.csv")).map_err(|e| e.to_string())?;
    let rows = csv.lines().count() - 1;

    // FAR of the initial encoding on its own
    let mut net = config.network.clone();
    net.epochs = config.inner_epochs;
    net.seed = config.seed;
    let model = train_classifier(&data.train, &initial, net).map_err(|e| e.to_string())?;
    let rule = DecisionRule::Dense(initial.clone());
    let scored = oos_encoding::metrics::score_samples(&model, &rule, &data.test).map_err(|e| e.to_string())?;
    let initial_far = compute_eer(&scored, ThresholdSemantics::DistanceCeiling)
        .map_err(|e| e.to_string())?
        .far_at_theta;
    let best = *trace.best_far_so_far().last().expect("non-empty");
    check(
        rows == 200 && best <= initial_far,
        "",
        format!("{rows} trace rows; best FAR {best:.3} vs initial {initial_far:.3}"),
    )?;
    within(
        start.elapsed(),
        Duration::from_secs(900),
        &format!("200 trace rows; best-so-far FAR {best:.3} ≤ initial {initial_far:.3}"),
    )
}

const INTENTS: [(&str, [&str; 6]); 3] = [
    (
        "price",
        ["what is the price of", "how much does the", "cost of the", "price for a", "is there a discount on", "how expensive is the"],
    ),
    (
        "delivery",
        ["when will the", "track delivery of the", "has my order of", "delivery date for the", "where is my", "shipping time for the"],
    ),
    (
        "warranty",
        ["warranty on the", "is the guarantee valid for", "how long is the warranty of", "claim warranty for the", "does the warranty cover", "warranty period for"],
    ),
];
const PRODUCTS: [&str; 4] = ["mattress", "pillow", "bed frame", "sofa cum bed"];

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (mut train, mut test) = (String::from("sentence,label\n"), String::from("sentence,label\n"));
    let mut sentences = Vec::new();
    for (label, prefixes) in INTENTS {
        for (i, prefix) in prefixes.iter().enumerate() {
            for (j, product) in PRODUCTS.iter().enumerate() {
                let s = format!("{prefix} {product}");
                if (i + j) % 4 == 0 {
                    test.push_str(&format!("{s},{label}\n"));
                } else {
                    train.push_str(&format!("{s},{label}\n"));
                }
                sentences.push(s);
            }
        }
    }
    for s in [
        "what is the weather in the city",
        "order a pizza with the",
        "is the shop open on sunday",
        "how much is a flight ticket",
        "where is the nearest hospital",
        "tell me about the mattress factory history",
    ] {
        test.push_str(&format!("{s},{HINT3_OOS_MARKER}\n"));
        sentences.push(s.to_string());
    }
    fs::write(dir.path().join("sofmattress_train.csv"), train).map_err(|e| e.to_string())?;
    fs::write(dir.path().join("sofmattress_test.csv"), test).map_err(|e| e.to_string())?;
    let mut table = EmbeddingTable::new(64).map_err(|e| e.to_string())?;
    for s in &sentences {
        table
            .insert(s.clone(), hash_featurize(s, 64).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    }
    let emb = dir.path().join("embeddings.txt");
    save_embedding_file(&table, &emb).map_err(|e| e.to_string())?;

    let data = parse_hint3(dir.path(), HINT3_OOS_MARKER).map_err(|e| e.to_string())?;
    let mut config = ExperimentConfig::new(
        vec![Algorithm::OneHotSoftmax, Algorithm::OneHotDistance, Algorithm::RandomDense],
        vec![3, 10],
        EmbeddingSource::File(emb),
    );
    config.samples_per_n = 5;
    config.network = NetworkConfig {
        hidden_dim: 64,
        epochs: 30,
        batch_size: 8,
        ..NetworkConfig::new(64, 3, Loss::CrossEntropy)
    };
    let report = run_experiment(&data, &config).map_err(|e| e.to_string())?;
    let csv = emit_report(&report, ReportFormat::Csv).map_err(|e| e.to_string())?;
    let lines: Vec<&str> = csv.lines().collect();
    let mut problems = Vec::new();
    if lines.len() != 5 {
        problems.push(format!("{} rows, expected 4", lines.len() - 1));
    }
    for line in &lines[1..] {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 14 || cells[0].is_empty() || cells[1].parse::<usize>().is_err() {
            problems.push(format!("malformed row `{line}`"));
            continue;
        }
        if cells[2..11].iter().any(|c| !c.parse::<f64>().is_ok_and(f64::is_finite)) {
            problems.push(format!("non-numeric metric in `{line}`"));
        }
        if cells[11..].iter().any(|c| !c.ends_with('%')) {
            problems.push(format!("unrendered delta in `{line}`"));
        }
    }
    let md = emit_report(&report, ReportFormat::Markdown).map_err(|e| e.to_string())?;
    check(
        problems.is_empty() && md.lines().count() == 6,
        format!("{} classes; 4-row report with deltas rendered", data.num_classes()),
        problems.join("; "),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "topology: max rule", criterion_1),
        (2, "topology: softmax rule", criterion_2),
        (3, "topology: one-hot distance, 2D", criterion_3),
        (4, "topology: random dense, 2D", criterion_4),
        (5, "metrics: EER sweep", criterion_5),
        (6, "decision-rule equivalences", criterion_6),
        (7, "model: gradients and determinism", criterion_7),
        (8, "trend: random encodings vs softmax", criterion_8),
        (9, "class encoding search", criterion_9),
        (10, "end-to-end HINT3 report", criterion_10),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {id:>2}  {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {id:>2}  {name} ({secs:.1}s): {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
