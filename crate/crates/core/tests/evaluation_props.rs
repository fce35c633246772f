mod common;

use elm_metalearn::evaluation::loo_evaluate;
use elm_metalearn::label_search::with_workers;
use elm_metalearn::meta_learners::{fit, LearnerSpec};
use elm_metalearn::metabase::MetaBase;
use proptest::prelude::*;

fn all_specs() -> Vec<LearnerSpec> {
    let mut specs = LearnerSpec::presets();
    specs.push(LearnerSpec::Mean);
    specs
}

/// n separate trainings, each on a meta-base rebuilt from scratch.
fn naive_loo(spec: &LearnerSpec, mb: &MetaBase) -> Vec<f64> {
    (0..mb.len())
        .map(|i| {
            let rest = mb
                .examples
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, e)| e.clone())
                .collect();
            let train = MetaBase::new(mb.header.clone(), rest).unwrap();
            fit(spec, &train)
                .unwrap()
                .predict_raw(&mb.examples[i].features, &mb.header.extractor_hash)
                .unwrap()
        })
        .collect()
}

#[test]
fn harness_equals_naive_refits() {
    let mb = common::structured_metabase(&mut common::rng(77), 10);
    for spec in all_specs() {
        let report = loo_evaluate(&spec, &mb).unwrap();
        let got: Vec<u64> = report.rows.iter().map(|r| r.predicted.to_bits()).collect();
        let want: Vec<u64> = naive_loo(&spec, &mb).iter().map(|p| p.to_bits()).collect();
        assert_eq!(got, want, "{}", spec.id());
        assert_eq!(report.rows.len(), mb.len());
        assert!(report.rae_percent >= 0.0);
    }
}

#[test]
fn held_out_label_does_not_leak() {
    let mb = common::structured_metabase(&mut common::rng(78), 12);
    for spec in all_specs() {
        let base = loo_evaluate(&spec, &mb).unwrap();
        for i in [0, 5, 11] {
            let mut changed = mb.clone();
            changed.examples[i].label = if mb.examples[i].label > 150 { 1 } else { 300 };
            let other = loo_evaluate(&spec, &changed).unwrap();
            assert_eq!(
                base.rows[i].predicted.to_bits(),
                other.rows[i].predicted.to_bits(),
                "{} example {i}",
                spec.id()
            );
        }
    }
}

#[test]
fn parallel_and_sequential_reports_agree() {
    let mb = common::structured_metabase(&mut common::rng(79), 15);
    for spec in all_specs() {
        let one = with_workers(1, || loo_evaluate(&spec, &mb)).unwrap().unwrap();
        let four = with_workers(4, || loo_evaluate(&spec, &mb)).unwrap().unwrap();
        assert_eq!(one, four);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mean_predictor_scores_exactly_one_hundred(seed in any::<u64>(), n in 3usize..60) {
        let mb = common::random_metabase(&mut common::rng(seed), n);
        let report = loo_evaluate(&LearnerSpec::Mean, &mb).unwrap();
        if !report.rae_degenerate {
            prop_assert!((report.rae_percent - 100.0).abs() <= 1e-9, "{}", report.rae_percent);
        }
    }
}
