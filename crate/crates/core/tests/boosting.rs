use std::sync::Arc;

use combo_core::boost::{
    alpha_for_edge, init_cost_matrix, round, train, update_cost_matrix, BoostConfig, BoostState, RoundOutcome,
    ScoreTable, WeightScheme,
};
use combo_core::data::{Dataset, FeatureSchema};
use combo_core::weaklearn::{check_weak_condition, edge, TreeLearner, WeakLearnerConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_dataset(seed: u64, m: usize, k: usize, features: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = (0..k).map(|c| format!("c{c}")).collect();
    let text = format!("{}label: {}\n", "numeric\n".repeat(features), names.join(","));
    let schema = FeatureSchema::parse(&text).unwrap();
    let mut labels: Vec<usize> = (0..k).collect();
    labels.extend((k..m).map(|_| if rng.random_bool(0.6) { 0 } else { rng.random_range(0..k) }));
    let values: Vec<f64> = (0..m * features)
        .map(|i| {
            let y = labels[i / features] as f64;
            (rng.random::<f64>() * 4.0 + y).round()
        })
        .collect();
    Dataset::new(Arc::new(schema), values, labels).unwrap()
}

fn balanced_dataset(seed: u64, per_class: usize, k: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = (0..k).map(|c| format!("c{c}")).collect();
    let schema = FeatureSchema::parse(&format!("numeric\nnumeric\nlabel: {}\n", names.join(","))).unwrap();
    let labels: Vec<usize> = (0..per_class * k).map(|i| i % k).collect();
    let values: Vec<f64> = (0..labels.len() * 2)
        .map(|i| rng.random::<f64>() * 3.0 + labels[i / 2] as f64)
        .collect();
    Dataset::new(Arc::new(schema), values, labels).unwrap()
}

/// `w(y, l)` written out independently of the library.
fn oracle_weight(scheme: &WeightScheme, counts: &[usize], y: usize, l: usize) -> f64 {
    match scheme {
        WeightScheme::InverseClassFrequency => 1.0 / counts[y] as f64,
        WeightScheme::Uniform => 1.0,
        WeightScheme::PairwiseCosts { costs } => costs[y][l] / counts[y] as f64,
    }
}

#[test]
fn loss_and_costs_match_from_scratch_oracle() {
    let d = random_dataset(1, 80, 3, 2);
    let schemes = [
        WeightScheme::InverseClassFrequency,
        WeightScheme::Uniform,
        WeightScheme::PairwiseCosts {
            costs: vec![vec![0.0, 1.0, 3.0], vec![2.0, 0.0, 1.0], vec![1.5, 1.0, 0.0]],
        },
    ];
    for scheme in schemes {
        let learner = TreeLearner::new(&d, WeakLearnerConfig::default()).unwrap();
        let mut state = BoostState::new(&d, &scheme).unwrap();
        let k = d.num_classes();
        let mut f = vec![vec![0.0; k]; d.len()];
        for t in 1..=3 {
            let record = match round(&d, &learner, &scheme, &mut state, t).unwrap() {
                RoundOutcome::Accepted(r) => r,
                RoundOutcome::Halted(h) => panic!("halted: {h:?}"),
            };
            for (i, row) in d.rows().enumerate() {
                f[i][record.tree.predict(row)] += record.alpha;
            }
            let mut loss = 0.0;
            for (i, &y) in d.labels().iter().enumerate() {
                let mut row_sum = 0.0;
                for l in (0..k).filter(|&l| l != y) {
                    let c = oracle_weight(&scheme, d.class_counts(), y, l) * (f[i][l] - f[i][y]).exp();
                    assert!((state.costs.get(i, l) - c).abs() <= 1e-12 * c.max(1e-300));
                    row_sum += c;
                    loss += c;
                }
                assert!((state.costs.get(i, y) + row_sum).abs() <= 1e-12 * row_sum);
            }
            assert!((record.loss - loss).abs() <= 1e-12 * loss, "round {t}: {} vs {loss}", record.loss);
        }
    }
}

#[test]
fn weak_condition_holds_with_equality_at_the_edge() {
    let d = random_dataset(2, 60, 4, 3);
    for scheme in [WeightScheme::InverseClassFrequency, WeightScheme::Uniform] {
        let costs = init_cost_matrix(&d, &scheme).unwrap();
        let learner = TreeLearner::new(&d, WeakLearnerConfig::default()).unwrap();
        let preds = learner.fit(&costs).unwrap().predict_all(&d);
        let delta = edge(&costs, d.labels(), &preds).unwrap();
        let w = check_weak_condition(&costs, d.labels(), &preds, delta).unwrap();
        assert!(w.holds);
        let scale: f64 = (0..d.len()).flat_map(|i| (0..4).map(move |l| (i, l))).map(|(i, l)| costs.get(i, l).abs()).sum();
        assert!((w.classifier_cost - w.baseline_cost).abs() <= 1e-12 * scale);
        let stricter = check_weak_condition(&costs, d.labels(), &preds, delta + 0.05).unwrap();
        assert!(!stricter.holds);
    }
}

#[test]
fn schemes_agree_on_balanced_data() {
    // With equal class sizes the two cost matrices differ by a constant factor.
    let d = balanced_dataset(3, 25, 3);
    let combo = train(&d, &BoostConfig::new(15, WeightScheme::InverseClassFrequency)).unwrap();
    let adamm = train(&d, &BoostConfig::new(15, WeightScheme::Uniform)).unwrap();
    assert_eq!(combo.rounds.len(), adamm.rounds.len());
    for (a, b) in combo.rounds.iter().zip(&adamm.rounds) {
        assert_eq!(a.tree, b.tree);
        assert!((a.edge - b.edge).abs() < 1e-12);
        assert!((a.loss * 25.0 - b.loss).abs() <= 1e-9 * b.loss);
    }
    assert_eq!(combo.predict_dataset(&d).unwrap(), adamm.predict_dataset(&d).unwrap());
}

#[test]
fn cost_rows_sum_to_zero_for_random_scores() {
    let d = random_dataset(4, 40, 5, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..1000 {
        let magnitude = if trial % 10 == 0 { 900.0 } else { 20.0 };
        let values: Vec<f64> = (0..d.len() * 5).map(|_| (rng.random::<f64>() - 0.5) * magnitude).collect();
        let f = ScoreTable::from_rows(5, values).unwrap();
        for scheme in [WeightScheme::InverseClassFrequency, WeightScheme::Uniform] {
            let c = update_cost_matrix(&f, &d, &scheme).unwrap();
            c.check_invariants(d.labels()).unwrap();
            assert!(c.row(0).iter().all(|v| v.is_finite()));
        }
    }
}

#[test]
fn rescaled_costs_pick_the_same_tree() {
    let d = random_dataset(6, 50, 3, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let values: Vec<f64> = (0..d.len() * 3).map(|_| rng.random::<f64>() * 5.0).collect();
    let shifted: Vec<f64> = values
        .iter()
        .enumerate()
        .map(|(i, v)| if i % 3 != d.labels()[i / 3] { v + 700.0 } else { *v })
        .collect();
    let plain = update_cost_matrix(&ScoreTable::from_rows(3, values).unwrap(), &d, &WeightScheme::Uniform).unwrap();
    let big = update_cost_matrix(&ScoreTable::from_rows(3, shifted).unwrap(), &d, &WeightScheme::Uniform).unwrap();
    assert_eq!(plain.log_scale(), 0.0);
    assert!(big.log_scale() > 600.0);
    let learner = TreeLearner::new(&d, WeakLearnerConfig::default()).unwrap();
    let t1 = learner.fit(&plain).unwrap();
    let t2 = learner.fit(&big).unwrap();
    assert_eq!(t1, t2);
    let p = t1.predict_all(&d);
    let e1 = edge(&plain, d.labels(), &p).unwrap();
    let e2 = edge(&big, d.labels(), &p).unwrap();
    assert!((e1 - e2).abs() < 1e-12);
}

#[test]
fn alpha_is_monotone_in_edge() {
    let mut previous = 0.0;
    for i in 1..1000 {
        let a = alpha_for_edge(i as f64 / 1000.0);
        assert!(a > previous);
        previous = a;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn loss_bounds_hold_on_random_problems(
        seed in any::<u64>(),
        m in 8usize..60,
        k in 2usize..5,
        depth in 1usize..3,
        rounds in 1usize..25,
        uniform in any::<bool>(),
    ) {
        let d = random_dataset(seed, m.max(k), k, 2);
        let scheme = if uniform { WeightScheme::Uniform } else { WeightScheme::InverseClassFrequency };
        let mut cfg = BoostConfig::new(rounds, scheme.clone());
        cfg.tree.max_depth = depth;
        let e = train(&d, &cfg).unwrap();
        if !uniform {
            prop_assert_eq!(e.initial_loss, (k * (k - 1)) as f64);
        }
        prop_assert!(e.verify_loss_bounds().is_ok());
        for r in &e.rounds {
            prop_assert!(r.alpha > 0.0 && r.edge > 0.0 && r.edge < 1.0);
        }
        let err = e.weighted_training_error(&d).unwrap();
        prop_assert!(err <= e.final_loss() * (1.0 + 1e-12));
        prop_assert!(e.rounds.len() == rounds || e.halt.is_some());
    }
}
