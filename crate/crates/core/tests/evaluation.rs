use std::sync::Arc;

use combo_core::boost::{train, BoostConfig, WeightScheme};
use combo_core::confusion::{ConfusionMatrix, MatrixForm};
use combo_core::data::{Dataset, FeatureSchema};
use combo_core::metrics::{evaluate, g_mean, mauc};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Hand–Till MAUC by direct enumeration of every cross-class pair.
fn brute_force_mauc(scores: &[Vec<f64>], labels: &[usize], k: usize) -> f64 {
    let present: Vec<usize> = (0..k).filter(|c| labels.contains(c)).collect();
    let a_hat = |l: usize, j: usize| {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &yi) in labels.iter().enumerate() {
            for (t, &yt) in labels.iter().enumerate() {
                if yi == l && yt == j {
                    pairs += 1.0;
                    let (a, b) = (scores[i][l], scores[t][l]);
                    wins += if a > b { 1.0 } else if a == b { 0.5 } else { 0.0 };
                }
            }
        }
        wins / pairs
    };
    let mut total = 0.0;
    let mut n_pairs = 0.0;
    for (x, &l) in present.iter().enumerate() {
        for &j in &present[x + 1..] {
            total += 0.5 * (a_hat(l, j) + a_hat(j, l));
            n_pairs += 1.0;
        }
    }
    total / n_pairs
}

fn random_scores(rng: &mut ChaCha8Rng, m: usize, k: usize, levels: u32) -> Vec<Vec<f64>> {
    (0..m)
        .map(|_| (0..k).map(|_| rng.random_range(0..levels) as f64 * 0.25).collect())
        .collect()
}

#[test]
fn three_class_toy_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let labels: Vec<usize> = (0..12).map(|i| i / 4).collect();
    for _ in 0..50 {
        let scores = random_scores(&mut rng, 12, 3, 5);
        let got = mauc(&scores, &labels, 3).unwrap().value;
        let want = brute_force_mauc(&scores, &labels, 3);
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
}

#[test]
fn random_mauc_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..200 {
        let k = rng.random_range(2..7);
        let m = rng.random_range(2..50);
        let labels: Vec<usize> = (0..m).map(|_| rng.random_range(0..k)).collect();
        if labels.iter().all(|&y| y == labels[0]) {
            continue;
        }
        let scores = random_scores(&mut rng, m, k, 8);
        let got = mauc(&scores, &labels, k).unwrap();
        let want = brute_force_mauc(&scores, &labels, k);
        assert!((got.value - want).abs() < 1e-12);
        let absent: Vec<usize> = (0..k).filter(|c| !labels.contains(c)).collect();
        assert_eq!(got.skipped_classes, absent);
    }
}

#[test]
fn evaluation_on_separable_training_data() {
    let schema = FeatureSchema::parse("numeric\nlabel: a,b,c\n").unwrap();
    let values: Vec<f64> = (0..30).map(|i| i as f64).collect();
    let labels: Vec<usize> = (0..30).map(|i| if i < 20 { 0 } else if i < 26 { 1 } else { 2 }).collect();
    let d = Dataset::new(Arc::new(schema), values, labels).unwrap();
    let e = train(&d, &BoostConfig::new(10, WeightScheme::InverseClassFrequency)).unwrap();
    let r = evaluate(&e, &d).unwrap();
    assert_eq!(r.accuracy, 1.0);
    assert_eq!(r.g_mean, 1.0);
    assert_eq!(r.operator_norm, 0.0);
    assert_eq!(r.l1_risk, 0.0);
    assert_eq!(r.mauc, 1.0);
}

#[test]
fn evaluation_rejects_other_schema() {
    let s1 = FeatureSchema::parse("numeric\nlabel: a,b\n").unwrap();
    let s2 = FeatureSchema::parse("numeric\nlabel: a,c\n").unwrap();
    let d1 = Dataset::new(Arc::new(s1), vec![0.0, 1.0], vec![0, 1]).unwrap();
    let d2 = Dataset::new(Arc::new(s2), vec![0.0, 1.0], vec![0, 1]).unwrap();
    let e = train(&d1, &BoostConfig::new(3, WeightScheme::Uniform)).unwrap();
    assert!(evaluate(&e, &d2).is_err());
}

proptest! {
    #[test]
    fn mauc_is_invariant_under_monotone_column_maps(seed in any::<u64>(), column in 0usize..3, scale in 0.1f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let scores = random_scores(&mut rng, 30, 3, 6);
        let mapped: Vec<Vec<f64>> = scores
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r[column] = (scale * r[column]).exp() - 3.0;
                r
            })
            .collect();
        let a = mauc(&scores, &labels, 3).unwrap().value;
        let b = mauc(&mapped, &labels, 3).unwrap().value;
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn g_mean_is_permutation_invariant_and_below_max_recall(seed in any::<u64>(), k in 2usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut entries = vec![0.0; k * k];
        for l in 0..k {
            let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 0.01).collect();
            let total: f64 = raw.iter().sum();
            for j in 0..k {
                entries[l * k + j] = raw[j] / total;
            }
        }
        let perm: Vec<usize> = {
            let mut p: Vec<usize> = (0..k).collect();
            p.rotate_left(1);
            p
        };
        let permuted: Vec<f64> = (0..k * k).map(|i| entries[perm[i / k] * k + perm[i % k]]).collect();
        let c = ConfusionMatrix::from_entries(k, entries, MatrixForm::Probabilistic).unwrap();
        let cp = ConfusionMatrix::from_entries(k, permuted, MatrixForm::Probabilistic).unwrap();
        let g = g_mean(&c).unwrap();
        prop_assert!((g - g_mean(&cp).unwrap()).abs() < 1e-12);
        let max_recall = c.diagonal().into_iter().fold(0.0, f64::max);
        prop_assert!(g <= max_recall + 1e-15 && g >= 0.0);
    }
}
