use std::path::Path;

use proptest::prelude::*;

use oos_encoding::ces::repulsion_update;
use oos_encoding::encoding::{
    classify_dense, classify_one_hot_distance, classify_softmax, one_hot_encoding_set, softmax, ClassDecision,
    ClassEncodingSet, DecisionRule, LikelihoodVector, ThresholdPolicy, ThresholdSemantics,
};
use oos_encoding::harness::{delta_percent, hash_featurize, EmbeddingTable, MetricSummary};
use oos_encoding::metrics::{compute_eer, ScoredSample};
use oos_encoding::model::{LikelihoodModel, Loss, NetworkConfig, SampleLabel};

fn unit_vec(p: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..=1.0, p)
}

fn z_and_dim() -> impl Strategy<Value = Vec<f64>> {
    (2usize..8).prop_flat_map(unit_vec)
}

fn dense_set() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..6, 1usize..6).prop_flat_map(|(c, p)| prop::collection::vec(unit_vec(p), c))
}

/// Distinct scores for each population (ties would allow larger FAR/FRR steps).
fn score_sets() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..40, 1usize..40).prop_flat_map(|(a, b)| {
        prop::collection::btree_set(0u32..100_000, a + b).prop_map(move |set| {
            let mut vals: Vec<f64> = set.into_iter().map(|v| v as f64 / 1000.0).collect();
            // deterministic interleaving so both populations span the range
            let mut is = Vec::new();
            let mut oos = Vec::new();
            for (i, v) in vals.drain(..).enumerate() {
                if (i % 3 == 0 && oos.len() < b) || is.len() == a {
                    oos.push(v);
                } else {
                    is.push(v);
                }
            }
            (is, oos)
        })
    })
}

fn scored(is: &[f64], oos: &[f64]) -> Vec<ScoredSample> {
    is.iter()
        .map(|&s| ScoredSample::new(s, 0, SampleLabel::Class(0)))
        .chain(oos.iter().map(|&s| ScoredSample::new(s, 0, SampleLabel::OutOfScope)))
        .collect()
}

proptest! {
    #[test]
    fn likelihood_vectors_are_clamped(values in prop::collection::vec(-10.0f64..10.0, 1..10)) {
        let z = LikelihoodVector::new(values).unwrap();
        prop_assert!(z.values().iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn softmax_preserves_argmax_and_sums_to_one(z in z_and_dim()) {
        let v = LikelihoodVector::new(z.clone()).unwrap();
        let s = softmax(&v);
        prop_assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let p = z.len();
        let a = DecisionRule::Max { classes: p }.evaluate(&v).unwrap().class;
        let b = DecisionRule::Softmax { classes: p }.evaluate(&v).unwrap().class;
        prop_assert_eq!(a, b);
    }

    #[test]
    fn softmax_floor_below_uniform_never_rejects(z in z_and_dim(), frac in 0.0f64..0.999) {
        let c = z.len();
        let policy = ThresholdPolicy::score_floor(frac / c as f64).unwrap();
        let d = classify_softmax(&LikelihoodVector::new(z).unwrap(), &policy).unwrap();
        prop_assert!(d.is_in_scope());
    }

    #[test]
    fn dense_one_hot_matches_one_hot_distance(z in z_and_dim(), theta in 0.0f64..2.5) {
        let set = one_hot_encoding_set(z.len()).unwrap();
        let v = LikelihoodVector::new(z).unwrap();
        let policy = ThresholdPolicy::distance_ceiling(theta).unwrap();
        prop_assert_eq!(
            classify_dense(&v, &set, &policy).unwrap(),
            classify_one_hot_distance(&v, &policy).unwrap()
        );
    }

    #[test]
    fn raising_a_floor_only_rejects_more(z in z_and_dim(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = (a.min(b), a.max(b));
        let v = LikelihoodVector::new(z).unwrap();
        let at_hi = classify_softmax(&v, &ThresholdPolicy::score_floor(hi).unwrap()).unwrap();
        let at_lo = classify_softmax(&v, &ThresholdPolicy::score_floor(lo).unwrap()).unwrap();
        if at_hi.is_in_scope() {
            prop_assert_eq!(at_hi, at_lo);
        }
    }

    #[test]
    fn dense_decision_is_nearest_code(vectors in dense_set(), seed in any::<u64>()) {
        let set = ClassEncodingSet::dense(vectors).unwrap();
        let p = set.dim();
        let z: Vec<f64> = (0..p).map(|i| (((seed >> (i % 60)) & 0xff) as f64 / 127.5) - 1.0).collect();
        let policy = ThresholdPolicy::distance_ceiling(10.0).unwrap();
        let d = classify_dense(&LikelihoodVector::new(z.clone()).unwrap(), &set, &policy).unwrap();
        let ClassDecision::InScope(k) = d else { panic!("ceiling 10 accepts everything") };
        let dist = |r: &[f64]| r.iter().zip(&z).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let best = dist(set.vector(k));
        for (i, r) in set.vectors().iter().enumerate() {
            prop_assert!(best < dist(r) || (best == dist(r) && k <= i));
        }
    }

    #[test]
    fn encoding_text_round_trip(vectors in dense_set()) {
        let set = ClassEncodingSet::dense(vectors).unwrap();
        let back = ClassEncodingSet::parse(&set.to_text(), Path::new("mem")).unwrap();
        prop_assert_eq!(back.vectors(), set.vectors());
    }

    #[test]
    fn eer_bound_without_ties((is, oos) in score_sets()) {
        for semantics in [ThresholdSemantics::ScoreFloor, ThresholdSemantics::DistanceCeiling] {
            let r = compute_eer(&scored(&is, &oos), semantics).unwrap();
            let bound = (1.0 / is.len() as f64).max(1.0 / oos.len() as f64);
            prop_assert!((r.far_at_theta - r.frr_at_theta).abs() <= bound + 1e-12);
            prop_assert!((0.0..=1.0).contains(&r.eer));
            prop_assert!(r.curve.windows(2).all(|w| w[0].theta < w[1].theta));
        }
    }

    #[test]
    fn eer_invariant_under_monotone_transform((is, oos) in score_sets(), scale in 0.1f64..10.0, shift in -5.0f64..5.0) {
        let base = compute_eer(&scored(&is, &oos), ThresholdSemantics::ScoreFloor).unwrap();
        let f = |v: &f64| {
            let x = scale * v + shift;
            x * x * x + x
        };
        let t_is: Vec<f64> = is.iter().map(f).collect();
        let t_oos: Vec<f64> = oos.iter().map(f).collect();
        let moved = compute_eer(&scored(&t_is, &t_oos), ThresholdSemantics::ScoreFloor).unwrap();
        prop_assert_eq!(base.eer, moved.eer);
        prop_assert_eq!(base.far_at_theta, moved.far_at_theta);
    }

    #[test]
    fn repulsion_is_permutation_equivariant_and_bounded(vectors in dense_set(), lambda in 0.0f64..0.5, rot in 0usize..5) {
        let set = ClassEncodingSet::dense(vectors.clone()).unwrap();
        let next = repulsion_update(&set, lambda).unwrap();
        prop_assert!(next.vectors().iter().flatten().all(|v| (-1.0..=1.0).contains(v)));

        let c = vectors.len();
        let mut permuted = vectors.clone();
        permuted.rotate_left(rot % c);
        let next_perm = repulsion_update(&ClassEncodingSet::dense(permuted).unwrap(), lambda).unwrap();
        for i in 0..c {
            let a = next.vector((i + rot % c) % c);
            let b = next_perm.vector(i);
            for (x, y) in a.iter().zip(b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn repulsion_with_zero_step_is_identity(vectors in dense_set()) {
        let set = ClassEncodingSet::dense(vectors).unwrap();
        let next = repulsion_update(&set, 0.0).unwrap();
        prop_assert_eq!(next.vectors(), set.vectors());
    }

    #[test]
    fn hashed_features_are_unit_or_zero(text in "[a-zA-Z0-9 ,.!?]{0,60}", dim in 8usize..128) {
        let v = hash_featurize(&text, dim).unwrap();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let has_token = text.chars().any(char::is_alphanumeric);
        if has_token {
            prop_assert!((norm - 1.0).abs() < 1e-9);
        } else {
            prop_assert_eq!(norm, 0.0);
        }
        prop_assert_eq!(v, hash_featurize(&text, dim).unwrap());
    }

    #[test]
    fn embedding_table_round_trip(rows in prop::collection::btree_map("[a-z ]{1,12}", unit_vec(4), 1..10)) {
        let mut t = EmbeddingTable::new(4).unwrap();
        for (id, v) in &rows {
            t.insert(id.clone(), v.clone()).unwrap();
        }
        let back = EmbeddingTable::parse(&t.to_text(), Path::new("mem")).unwrap();
        for (id, v) in &rows {
            let got = back.get(id).unwrap();
            prop_assert!(got.iter().zip(v).all(|(a, b)| (a - b).abs() <= 1e-9));
        }
    }

    #[test]
    fn summary_min_below_avg(values in prop::collection::vec(0.0f64..1.0, 1..50)) {
        let s = MetricSummary::of(&values);
        prop_assert!(s.min <= s.avg);
        prop_assert!(s.std >= 0.0);
    }

    #[test]
    fn delta_sign_follows_change(base in 0.01f64..1.0, value in 0.0f64..1.0) {
        let d = delta_percent(base, value);
        prop_assert!(d.ends_with('%'));
        if value < base * 0.99 {
            prop_assert!(d.starts_with('-'));
        }
        if value > base * 1.01 {
            prop_assert!(d.starts_with('+'));
        }
    }

    #[test]
    fn checkpoint_round_trip(seed in any::<u64>(), loss_is_mse in any::<bool>()) {
        let loss = if loss_is_mse { Loss::Mse } else { Loss::CrossEntropy };
        let cfg = NetworkConfig { hidden_dim: 5, seed, ..NetworkConfig::new(3, 2, loss) };
        let model = LikelihoodModel::initialize(cfg).unwrap();
        let back = LikelihoodModel::from_checkpoint(&model.to_checkpoint(), Path::new("mem")).unwrap();
        prop_assert_eq!(back.parameters(), model.parameters());
        prop_assert_eq!(back.config().loss, loss);
    }
}
