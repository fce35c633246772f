#![allow(dead_code)]

use elm_metalearn::dataset::{Column, Dataset};
use elm_metalearn::label_search::SweepConfig;
use elm_metalearn::meta_features::{ExtractorConfig, MetaFeatureVector, N_META_FEATURES};
use elm_metalearn::metabase::{MetaBase, MetaBaseHeader, MetaExample};
use elm_metalearn::seed;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(s: u64) -> ChaCha8Rng {
    seed::rng(s)
}

/// Random small dataset with `cont` continuous columns and, optionally, one
/// symbolic column with up to three levels. Values are skewed so moments are
/// non-trivial.
pub fn random_dataset(r: &mut ChaCha8Rng, rows: usize, cont: usize, symbolic: bool) -> Dataset {
    let mut features: Vec<Column> = (0..cont)
        .map(|j| {
            let v = (0..rows)
                .map(|_| {
                    let u: f64 = r.random_range(-1.0..1.0);
                    u * u * u * 5.0 + r.random_range(-0.5..0.5) + j as f64
                })
                .collect();
            Column::continuous(format!("a{j}"), v)
        })
        .collect();
    if symbolic {
        let levels = ["red", "green", "blue"];
        let cells: Vec<&str> = (0..rows).map(|i| levels[(i + r.random_range(0..3)) % 3]).collect();
        features.push(Column::symbolic("colour", &cells));
    }
    let target: Vec<f64> = (0..rows)
        .map(|i| {
            let base: f64 = features
                .iter()
                .filter_map(|c| c.as_continuous())
                .map(|v| v[i])
                .sum();
            base * 0.7 + r.random_range(-2.0..2.0) + 3.0
        })
        .collect();
    Dataset::new("fixture", features, "y", target).unwrap()
}

pub fn header(n_min: usize, n_max: usize) -> MetaBaseHeader {
    MetaBaseHeader::new(
        ExtractorConfig::default(),
        SweepConfig {
            n_min,
            n_max,
            ..SweepConfig::default()
        },
    )
}

/// Meta-base of `n` examples with random features and labels in [1, 300].
pub fn random_metabase(r: &mut ChaCha8Rng, n: usize) -> MetaBase {
    let examples = (0..n)
        .map(|i| {
            let mut v = [0.0; N_META_FEATURES];
            for x in v.iter_mut() {
                *x = r.random_range(-5.0..5.0);
            }
            MetaExample {
                dataset: format!("ds{i:03}"),
                features: MetaFeatureVector(v),
                label: r.random_range(1..=300),
            }
        })
        .collect();
    MetaBase::new(header(1, 300), examples).unwrap()
}

/// Meta-base whose label depends smoothly on two features.
pub fn structured_metabase(r: &mut ChaCha8Rng, n: usize) -> MetaBase {
    let examples = (0..n)
        .map(|i| {
            let mut v = [0.0; N_META_FEATURES];
            for x in v.iter_mut() {
                *x = r.random_range(0.0..1.0);
            }
            let label: f64 = 20.0 + 150.0 * v[4] + 80.0 * (3.0f64 * v[9]).sin() + r.random_range(-5.0..5.0);
            MetaExample {
                dataset: format!("ds{i:03}"),
                features: MetaFeatureVector(v),
                label: label.round().clamp(1.0, 300.0) as usize,
            }
        })
        .collect();
    MetaBase::new(header(1, 300), examples).unwrap()
}
