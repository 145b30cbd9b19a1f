mod common;

use std::collections::BTreeSet;

use debtor_strategy::case::{ExtractionContext, FeatureVector, StaticValue};
use debtor_strategy::scoring::{
    normalize_scores, score_dimension, score_pool, Dimension, Provenance, ReferenceStats, Typology, WeightSet,
    WeightTable,
};
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

fn table(dim: Dimension, weights: &[f64]) -> WeightTable {
    let entries = weights.iter().enumerate().map(|(i, w)| (format!("f{i}"), *w)).collect();
    WeightTable::new(dim, entries, Provenance::User("prop".into())).unwrap()
}

fn vector(dim: Dimension, xs: &[Option<f64>]) -> FeatureVector {
    FeatureVector {
        dimension: dim,
        values: xs.iter().enumerate().map(|(i, x)| (format!("f{i}"), *x)).collect(),
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

fn letters(scores: &[f64]) -> Vec<bool> {
    scores.iter().map(|s| *s >= 0.5).collect()
}

#[test]
fn orthant_pool_covers_all_labels() {
    let (_, scored) = score_pool(&common::orthant_pool(), &common::orthant_weights(), &ExtractionContext::default()).unwrap();
    let labels: BTreeSet<String> = scored.iter().map(|s| s.typology.label()).collect();
    assert_eq!(labels.len(), 16);
    for s in &scored {
        let bits: u8 = s.case_id[1..].parse().unwrap();
        let expected = Typology::from_high_flags([0, 1, 2, 3].map(|k| (bits >> (3 - k)) & 1 == 1));
        assert_eq!(s.typology, expected, "{}", s.case_id);
    }
}

#[test]
fn default_weights_score_random_pool() {
    let pool = common::random_pool(11, 200);
    let (_, scored) = score_pool(&pool, &WeightSet::default_tables(), &ExtractionContext::default()).unwrap();
    assert_eq!(scored.len(), 200);
    for s in &scored {
        for v in s.scores.normalized.values() {
            assert!((0.0..=1.0).contains(v));
        }
    }
}

proptest! {
    #![proptest_config(config(1000))]

    #[test]
    fn weighted_sum_is_linear(
        data in prop::collection::vec((-5.0f64..5.0, -3.0f64..3.0, -3.0f64..3.0, any::<bool>()), 1..20),
        c in -4.0f64..4.0,
    ) {
        let xs: Vec<Option<f64>> = data.iter().map(|d| if d.3 { Some(d.0) } else { None }).collect();
        let w1: Vec<f64> = data.iter().map(|d| d.1).collect();
        let w2: Vec<f64> = data.iter().map(|d| d.2).collect();
        let sum: Vec<f64> = w1.iter().zip(&w2).map(|(a, b)| a + b).collect();
        let scaled: Vec<f64> = w1.iter().map(|a| c * a).collect();
        let v = vector(Dimension::Ability, &xs);
        let s1 = score_dimension(&v, &table(Dimension::Ability, &w1)).unwrap();
        let s2 = score_dimension(&v, &table(Dimension::Ability, &w2)).unwrap();
        prop_assert!(close(score_dimension(&v, &table(Dimension::Ability, &sum)).unwrap(), s1 + s2));
        prop_assert!(close(score_dimension(&v, &table(Dimension::Ability, &scaled)).unwrap(), c * s1));
        // Missing values contribute nothing.
        let filled: Vec<Option<f64>> = xs.iter().map(|x| Some(x.unwrap_or(0.0))).collect();
        prop_assert_eq!(score_dimension(&vector(Dimension::Ability, &filled), &table(Dimension::Ability, &w1)).unwrap(), s1);
    }

    #[test]
    fn raising_a_positive_feature_never_lowers_the_score(
        seed in any::<u64>(),
        n in 8usize..40,
        who in 0usize..40,
        bump in 0.1f64..30.0,
    ) {
        let pool = common::random_pool(seed, n);
        let weights = WeightSet::default_tables();
        let reference = ReferenceStats::fit(&pool, &weights, &ExtractionContext::default()).unwrap();
        let base = pool[who % n].attr("schufa_score").map_or(70.0, StaticValue::as_f64);
        let before_case = pool[who % n].clone().with_attr("schufa_score", StaticValue::Number(base));
        let after_case = before_case.clone().with_attr("schufa_score", StaticValue::Number(base + bump));
        let before = reference.score(&before_case, &weights).unwrap();
        let after = reference.score(&after_case, &weights).unwrap();
        let b = before.scores.normalized[&Dimension::Ability];
        let a = after.scores.normalized[&Dimension::Ability];
        prop_assert!(a >= b, "{b} -> {a}");
        prop_assert!(!(before.typology.is_high(Dimension::Ability) && !after.typology.is_high(Dimension::Ability)));
    }

    #[test]
    fn affine_maps_keep_letters(
        raw in prop::collection::vec(-100.0f64..100.0, 1..50),
        a in 0.01f64..100.0,
        b in -1000.0f64..1000.0,
    ) {
        let mapped: Vec<f64> = raw.iter().map(|y| a * y + b).collect();
        prop_assert_eq!(letters(&normalize_scores(&raw)), letters(&normalize_scores(&mapped)));
    }

    #[test]
    fn scaling_weights_keeps_typologies(seed in any::<u64>(), n in 2usize..30, k in 0.05f64..20.0) {
        let pool = common::random_pool(seed, n);
        let weights = WeightSet::default_tables();
        let scaled = WeightSet::from_tables(weights.tables().map(|t| {
            WeightTable::new(
                t.dimension(),
                t.entries().iter().map(|(id, w)| (id.clone(), w * k)).collect(),
                Provenance::User("scaled".into()),
            )
            .unwrap()
        }))
        .unwrap();
        let ctx = ExtractionContext::default();
        let (_, a) = score_pool(&pool, &weights, &ctx).unwrap();
        let (_, b) = score_pool(&pool, &scaled, &ctx).unwrap();
        for (x, y) in a.iter().zip(&b) {
            for d in Dimension::ALL {
                // A raw score on the exact midpoint of the pool range is a
                // tie that rounding may break either way.
                if (x.scores.normalized[&d] - 0.5).abs() > 1e-9 {
                    prop_assert_eq!(x.typology.is_high(d), y.typology.is_high(d));
                }
            }
        }
    }

    #[test]
    fn degenerate_pools_sit_on_the_cutoff(seed in any::<u64>(), n in 1usize..20) {
        let one = common::random_case(seed, 0);
        let pool: Vec<_> = (0..n)
            .map(|i| {
                let mut c = one.clone();
                c.case_id = format!("dup{i}");
                c
            })
            .collect();
        let (_, scored) = score_pool(&pool, &WeightSet::default_tables(), &ExtractionContext::default()).unwrap();
        for s in &scored {
            prop_assert!(s.scores.normalized.values().all(|v| *v == 0.5));
            prop_assert_eq!(s.typology.label(), "WAOR");
        }
    }

    #[test]
    fn pool_order_does_not_matter(seed in any::<u64>(), n in 2usize..30, rot in 0usize..30) {
        let pool = common::random_pool(seed, n);
        let mut rotated = pool.clone();
        rotated.rotate_left(rot % n);
        rotated.reverse();
        let ctx = ExtractionContext::default();
        let weights = WeightSet::default_tables();
        let (_, a) = score_pool(&pool, &weights, &ctx).unwrap();
        let (_, b) = score_pool(&rotated, &weights, &ctx).unwrap();
        for s in &a {
            let t = b.iter().find(|x| x.case_id == s.case_id).unwrap();
            prop_assert_eq!(s, t);
        }
    }
}
