mod common;

use elm_metalearn::dataset::{Column, ColumnData, Dataset};
use elm_metalearn::meta_features::{extract_meta_features, r_squared, ExtractorConfig};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn extract(d: &Dataset) -> [f64; 16] {
    extract_meta_features(d, &ExtractorConfig::default()).unwrap().features.0
}

fn map_continuous(d: &Dataset, f: impl Fn(f64) -> f64) -> Dataset {
    let features = d
        .features
        .iter()
        .map(|c| match &c.data {
            ColumnData::Continuous(v) => Column::continuous(c.name.clone(), v.iter().map(|&x| f(x)).collect()),
            _ => c.clone(),
        })
        .collect();
    Dataset::new(d.name.clone(), features, d.target_name.clone(), d.target.clone()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn row_permutation_is_bitwise_invisible(s in any::<u64>(), rows in 8usize..40, cont in 0usize..4, sym in any::<bool>()) {
        let mut r = common::rng(s);
        let d = common::random_dataset(&mut r, rows, cont, sym || cont == 0);
        let mut order: Vec<usize> = (0..rows).collect();
        order.shuffle(&mut r);
        let a = extract(&d);
        let b = extract(&d.select_rows(&order));
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn moment_features_are_translation_and_scale_invariant(
        s in any::<u64>(), rows in 8usize..40, cont in 1usize..4, shift in -100.0f64..100.0, scale in 0.1f64..20.0
    ) {
        let d = common::random_dataset(&mut common::rng(s), rows, cont, false);
        let base = extract(&d);
        let shifted = extract(&map_continuous(&d, |x| x + shift));
        for j in 0..3 {
            prop_assert!((base[j] - shifted[j]).abs() <= 1e-9 * (1.0 + base[j].abs()));
        }
        let scaled = extract(&map_continuous(&d, |x| x * scale));
        prop_assert!((base[1] - scaled[1]).abs() <= 1e-9 * (1.0 + base[1].abs()));
    }

    #[test]
    fn bounded_features(s in any::<u64>(), rows in 5usize..40, cont in 0usize..4, sym in any::<bool>()) {
        let d = common::random_dataset(&mut common::rng(s), rows, cont, sym || cont == 0);
        let f = extract(&d);
        prop_assert!(f.iter().all(|v| v.is_finite()));
        prop_assert!((0.0..=1.0).contains(&f[8]));
        prop_assert!(f[7] <= cont as f64);
        prop_assert!((0.0..=1.0).contains(&f[9]) && (0.0..=1.0).contains(&f[10]));
        for j in [11, 12] {
            prop_assert!([0.0, 1.0, 2.0].contains(&f[j]));
        }
        for j in [13, 15] {
            prop_assert!([0.0, 1.0].contains(&f[j]));
        }
        prop_assert!(f[14] >= 0.0);
    }

    #[test]
    fn binarized_r2_dominates_numeric(s in any::<u64>(), rows in 12usize..40, cont in 1usize..4) {
        let d = common::random_dataset(&mut common::rng(s), rows, cont, true);
        let numeric = r_squared(&d, false).value;
        let binarized = r_squared(&d, true).value;
        prop_assert!(numeric <= binarized + 1e-9, "{numeric} > {binarized}");
    }
}

#[test]
fn linear_fixture_features() {
    let mut r = common::rng(5);
    use rand::Rng;
    let cols: Vec<Vec<f64>> = (0..3).map(|_| (0..100).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
    let target: Vec<f64> = (0..100).map(|i| 5.0 + cols[0][i] - 2.0 * cols[1][i] + 0.5 * cols[2][i]).collect();
    let features = cols
        .into_iter()
        .enumerate()
        .map(|(j, v)| Column::continuous(format!("x{j}"), v))
        .collect();
    let d = Dataset::new("lin", features, "y", target).unwrap();
    let f = extract(&d);
    assert_eq!(f[5], 3.0);
    assert_eq!(f[6], 100.0);
    assert_eq!(f[7], 0.0);
    assert!((f[9] - 1.0).abs() < 1e-12 && (f[10] - 1.0).abs() < 1e-12);
}
