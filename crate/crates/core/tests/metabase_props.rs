mod common;

use elm_metalearn::metabase::{build_metabase, load_metabase, save_metabase, LabelRecord};
use rand::seq::SliceRandom;
use rand::Rng;

#[test]
fn save_load_is_identity_over_random_metabases() {
    let mut r = common::rng(2);
    let dir = tempfile::tempdir().unwrap();
    for trial in 0..100 {
        let n = r.random_range(1..25);
        let mut mb = common::random_metabase(&mut r, n);
        // exercise awkward values: tiny, huge, negative zero, integers
        mb.examples[0].features.0[3] = 1e-300 * r.random_range(1.0..2.0);
        mb.examples[0].features.0[4] = -0.0;
        mb.examples[0].features.0[5] = 1e300;
        mb.examples[0].features.0[6] = 42.0;
        let path = dir.path().join(format!("mb{trial}.csv"));
        save_metabase(&mb, &path).unwrap();
        let back = load_metabase(&path).unwrap();
        assert_eq!(back, mb);
        for (a, b) in back.examples.iter().zip(&mb.examples) {
            for (x, y) in a.features.0.iter().zip(&b.features.0) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }
}

#[test]
fn build_ignores_input_order() {
    let mut r = common::rng(9);
    let src = common::random_metabase(&mut r, 20);
    let mut feats: Vec<_> = src.examples.iter().map(|e| (e.dataset.clone(), e.features)).collect();
    let mut labels: Vec<LabelRecord> = src
        .examples
        .iter()
        .map(|e| LabelRecord {
            dataset: e.dataset.clone(),
            best_count: e.label,
        })
        .collect();
    let (a, _) = build_metabase(src.header.clone(), &feats, &labels).unwrap();
    for _ in 0..10 {
        feats.shuffle(&mut r);
        labels.shuffle(&mut r);
        let (b, report) = build_metabase(src.header.clone(), &feats, &labels).unwrap();
        assert_eq!(a, b);
        assert!(report.features_only.is_empty() && report.labels_only.is_empty());
    }
}

#[test]
fn loading_rejects_foreign_extractor_config() {
    let mut r = common::rng(4);
    let mut mb = common::random_metabase(&mut r, 3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mb.csv");
    mb.header.extractor.outlier_factor = 3.0;
    save_metabase(&mb, &path).unwrap();
    assert!(load_metabase(&path).is_err());
}
