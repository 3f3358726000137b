use std::path::{Path, PathBuf};
use std::sync::Arc;

use combo_core::data::{load_csv, stratified_folds, Dataset, FeatureSchema};
use combo_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn load(name: &str) -> Dataset {
    let schema = FeatureSchema::read(data_dir().join(format!("{name}.schema"))).unwrap();
    load_csv(data_dir().join(format!("{name}.csv")), &schema).unwrap()
}

#[test]
fn bundled_dataset_shapes() {
    let balance = load("balance");
    assert_eq!((balance.len(), balance.num_classes(), balance.num_features()), (625, 3, 4));
    assert_eq!(balance.schema().class_names(), ["B", "L", "R"]);
    assert_eq!(balance.class_counts(), [49, 288, 288]);
    assert!((balance.imbalance_ratio() - 288.0 / 49.0).abs() < 1e-12);

    let yeast = load("yeast");
    assert_eq!((yeast.len(), yeast.num_classes(), yeast.num_features()), (1484, 10, 8));
    assert_eq!(yeast.class_counts().iter().max(), Some(&463));
    assert_eq!(yeast.class_counts().iter().min(), Some(&5));

    let car = load("car");
    assert_eq!((car.len(), car.num_classes(), car.num_features()), (1728, 4, 6));
    assert_eq!(car.schema().class_names(), ["acc", "good", "unacc", "vgood"]);
    assert_eq!(car.class_counts(), [384, 69, 1210, 65]);
}

#[test]
fn row_errors_carry_position() {
    let dir = tempfile::tempdir().unwrap();
    let schema = FeatureSchema::parse("numeric\ncategorical: x,y\nlabel\n").unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "1,x,a\n2,z,b\n").unwrap();
    match load_csv(&path, &schema) {
        Err(Error::Row { row, column, .. }) => assert_eq!((row, column), (2, 2)),
        other => panic!("{other:?}"),
    }
    std::fs::write(&path, "1,x,a\n?,y,b\n").unwrap();
    assert!(matches!(load_csv(&path, &schema), Err(Error::Row { row: 2, column: 1, .. })));
    std::fs::write(&path, "1,x,a\n1,x,a\n").unwrap();
    assert!(matches!(load_csv(&path, &schema), Err(Error::Data(_))));
}

fn random_dataset(seed: u64, m: usize, k: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = (0..k).map(|c| format!("c{c}")).collect();
    let schema = FeatureSchema::parse(&format!("numeric\nlabel: {}\n", names.join(","))).unwrap();
    let mut labels: Vec<usize> = (0..k).collect();
    labels.extend((k..m).map(|_| if rng.random_bool(0.7) { 0 } else { rng.random_range(0..k) }));
    let values = (0..m).map(|i| i as f64).collect();
    Dataset::new(Arc::new(schema), values, labels).unwrap()
}

proptest! {
    #[test]
    fn folds_partition_and_stratify(seed in any::<u64>(), m in 10usize..200, k in 2usize..6, folds in 2usize..8, runs in 1usize..4) {
        let d = random_dataset(seed, m, k);
        let plan = stratified_folds(&d, folds, runs, seed).unwrap();
        for run in 0..runs {
            let mut seen = vec![0usize; m];
            for fold in 0..folds {
                for &i in plan.test_indices(run, fold) {
                    seen[i] += 1;
                }
                let train = plan.train_indices(run, fold);
                prop_assert_eq!(train.len() + plan.test_indices(run, fold).len(), m);
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
            for class in 0..k {
                let per_fold: Vec<usize> = (0..folds)
                    .map(|f| plan.test_indices(run, f).iter().filter(|&&i| d.labels()[i] == class).count())
                    .collect();
                let lo = *per_fold.iter().min().unwrap();
                let hi = *per_fold.iter().max().unwrap();
                prop_assert!(hi - lo <= 1, "class {} spread {:?}", class, per_fold);
            }
            let sizes: Vec<usize> = (0..folds).map(|f| plan.test_indices(run, f).len()).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
        prop_assert_eq!(stratified_folds(&d, folds, runs, seed).unwrap(), plan);
    }
}
