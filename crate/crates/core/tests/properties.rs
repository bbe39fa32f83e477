use std::collections::HashMap;

use hlsqor::dataset::{split, Dataset, DesignRecord, Labels};
use hlsqor::eval::{mape, r_squared};
use hlsqor::features::{features_from_csv, features_to_csv, FeatureSource, FeatureVector, SLOT_COUNT};
use hlsqor::model::{RandomForest, Tree, TreeParams};
use proptest::prelude::*;

fn vector(seed: u32, freq: f64) -> FeatureVector {
    let slots = (0..SLOT_COUNT).map(|i| ((seed as usize * 31 + i * 7) % 13) as f64).collect();
    FeatureVector::from_slots(slots, freq).unwrap()
}

fn dataset(keys: &[(u32, u8)]) -> Dataset {
    let records = keys
        .iter()
        .enumerate()
        .map(|(i, &(seed, f))| DesignRecord {
            design: "d".into(),
            variant: format!("v{i}"),
            device: "zynq7000".into(),
            features: vector(seed, 100.0 + f as f64),
            labels: Labels {
                cp_ns: Some(1.0 + i as f64),
                latency_cycles: Some(i as u64),
                luts: None,
            },
        })
        .collect();
    Dataset::new(records).unwrap()
}

proptest! {
    #[test]
    fn split_is_a_deterministic_partition(
        keys in prop::collection::vec((0u32..8, 0u8..3), 4..40),
        share in 0.1f64..0.9,
        seed in any::<u64>(),
    ) {
        let data = dataset(&keys);
        let train_count = ((data.len() as f64 * share) as usize).clamp(1, data.len() - 1);
        let a = split(&data, train_count, seed).unwrap();
        let b = split(&data, train_count, seed).unwrap();
        prop_assert_eq!(&a.train, &b.train);
        prop_assert_eq!(&a.test, &b.test);
        prop_assert!(a.train.len() >= train_count);
        prop_assert_eq!(a.train.len() + a.test.len(), data.len());
        let mut variants: Vec<&str> = a.train.records.iter().chain(&a.test.records).map(|r| r.variant.as_str()).collect();
        variants.sort_unstable();
        variants.dedup();
        prop_assert_eq!(variants.len(), data.len());
    }

    #[test]
    fn duplicated_feature_vectors_stay_in_train(
        keys in prop::collection::vec((0u32..6, 0u8..2), 4..30),
        seed in any::<u64>(),
    ) {
        let data = dataset(&keys);
        let mut counts: HashMap<(u32, u8), usize> = HashMap::new();
        for k in &keys {
            *counts.entry(*k).or_default() += 1;
        }
        let parts = split(&data, 1, seed).unwrap();
        for r in &parts.test.records {
            let i: usize = r.variant[1..].parse().unwrap();
            prop_assert_eq!(counts[&keys[i]], 1, "duplicate {} landed in test", r.variant);
        }
    }

    #[test]
    fn mape_is_scale_invariant(
        pairs in prop::collection::vec((0.1f64..1e4, 0.0f64..1e4), 1..30),
        k in 0.01f64..100.0,
    ) {
        let (a, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let base = mape(&a, &p).unwrap();
        let scaled = mape(
            &a.iter().map(|v| v * k).collect::<Vec<_>>(),
            &p.iter().map(|v| v * k).collect::<Vec<_>>(),
        ).unwrap();
        prop_assert!((base - scaled).abs() <= 1e-9 * base.max(1.0));
        prop_assert!(base >= 0.0);
    }

    #[test]
    fn r_squared_identities(actual in prop::collection::vec(-1e3f64..1e3, 2..30), noise in prop::collection::vec(-10.0f64..10.0, 30)) {
        let mean = actual.iter().sum::<f64>() / actual.len() as f64;
        prop_assume!(actual.iter().any(|v| (v - mean).abs() > 1e-6));
        prop_assert_eq!(r_squared(&actual, &actual).unwrap(), 1.0);
        let flat = vec![mean; actual.len()];
        prop_assert!(r_squared(&actual, &flat).unwrap().abs() <= 1e-9);
        let noisy: Vec<f64> = actual.iter().zip(&noise).map(|(a, n)| a + n).collect();
        prop_assert!(r_squared(&actual, &noisy).unwrap() <= 1.0);
    }

    #[test]
    fn tree_leaves_hold_the_mean_of_their_rows(
        rows in prop::collection::vec((prop::collection::vec(-5.0f64..5.0, 3), -100.0f64..100.0), 2..60),
        max_depth in 0usize..6,
        min_samples_leaf in 1usize..5,
    ) {
        let (x, y): (Vec<Vec<f64>>, Vec<f64>) = rows.into_iter().unzip();
        let all: Vec<usize> = (0..y.len()).collect();
        let params = TreeParams { max_depth, min_samples_leaf, max_features: None };
        let tree = Tree::fit(&x, &y, &all, params, None);
        let mut groups: HashMap<usize, Vec<f64>> = HashMap::new();
        for (xi, yi) in x.iter().zip(&y) {
            groups.entry(tree.leaf_index(xi)).or_default().push(*yi);
        }
        for (xi, _) in x.iter().zip(&y) {
            let members = &groups[&tree.leaf_index(xi)];
            let mean = members.iter().sum::<f64>() / members.len() as f64;
            prop_assert!((tree.predict(xi) - mean).abs() <= 1e-9 * mean.abs().max(1.0));
            if groups.len() > 1 {
                prop_assert!(members.len() >= min_samples_leaf);
            }
        }
    }

    #[test]
    fn forest_predicts_the_mean_of_its_trees(
        rows in prop::collection::vec((prop::collection::vec(-5.0f64..5.0, 4), -10.0f64..10.0), 4..40),
        probe in prop::collection::vec(-6.0f64..6.0, 4),
        seed in any::<u64>(),
    ) {
        let (x, y): (Vec<Vec<f64>>, Vec<f64>) = rows.into_iter().unzip();
        let params = TreeParams { max_depth: 4, min_samples_leaf: 1, max_features: Some(2) };
        let forest = RandomForest::fit(&x, &y, 7, true, params, seed);
        let mean = forest.trees.iter().map(|t| t.predict(&probe)).sum::<f64>() / forest.trees.len() as f64;
        prop_assert!((forest.predict(&probe) - mean).abs() <= 1e-12 * mean.abs().max(1.0));
        let again = RandomForest::fit(&x, &y, 7, true, params, seed);
        prop_assert_eq!(again.predict(&probe).to_bits(), forest.predict(&probe).to_bits());
    }

    #[test]
    fn feature_csv_round_trips(
        rows in prop::collection::vec((prop::collection::vec(-1e6f64..1e6, SLOT_COUNT), 1.0f64..1000.0), 1..5),
    ) {
        let vectors: Vec<FeatureVector> = rows
            .into_iter()
            .map(|(slots, f)| FeatureVector::from_slots(slots, f).unwrap())
            .collect();
        let back = features_from_csv(&features_to_csv(&vectors)).unwrap();
        prop_assert_eq!(back, vectors);
    }

    #[test]
    fn families_concatenate_to_the_input(slots in prop::collection::vec(-1e3f64..1e3, SLOT_COUNT), f in 1.0f64..800.0) {
        let v = FeatureVector::from_slots(slots.clone(), f).unwrap();
        let joined: Vec<f64> = FeatureSource::ALL.iter().flat_map(|s| v.family(*s).to_vec()).collect();
        prop_assert_eq!(&joined, &slots);
        let mut input = slots;
        input.push(f);
        prop_assert_eq!(v.as_input(), input);
    }
}
