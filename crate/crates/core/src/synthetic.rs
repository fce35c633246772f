//! Synthetic regression datasets with controllable complexity.
//!
//! The target is a sum of `components` sinusoids of increasing frequency in
//! the first input, a weak linear term in any further inputs, and Gaussian
//! noise. More components need more hidden units to fit, which gives the
//! meta-learning pipeline a known signal to recover.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Column, Dataset};
use crate::error::Result;
use crate::seed;

/// Angular frequency increment between successive components.
pub const FREQ_STEP: f64 = 0.35 * PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinusoidSpec {
    pub name: String,
    pub rows: usize,
    pub inputs: usize,
    pub components: usize,
    pub noise: f64,
    /// Adds a three-level symbolic column that shifts the target.
    pub symbolic: bool,
    pub seed: u64,
}

pub fn sinusoid_dataset(spec: &SinusoidSpec) -> Result<Dataset> {
    let mut rng = seed::rng(spec.seed);
    let inputs = spec.inputs.max(1);
    let xs: Vec<Vec<f64>> = (0..inputs)
        .map(|_| (0..spec.rows).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect();
    let phases: Vec<f64> = (0..spec.components).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    let amplitudes: Vec<f64> = (0..spec.components).map(|_| rng.random_range(0.5..1.5)).collect();
    let noise = Normal::new(0.0, spec.noise.max(0.0)).expect("valid noise level");

    let levels = ["low", "mid", "high"];
    let groups: Vec<usize> = (0..spec.rows).map(|_| rng.random_range(0..levels.len())).collect();

    let target: Vec<f64> = (0..spec.rows)
        .map(|i| {
            let mut t = 10.0;
            for k in 0..spec.components {
                let freq = (k + 1) as f64 * FREQ_STEP;
                t += amplitudes[k] * (freq * xs[0][i] + phases[k]).sin();
            }
            for x in &xs[1..] {
                t += 0.3 * x[i];
            }
            if spec.symbolic {
                t += groups[i] as f64 * 0.5;
            }
            t + noise.sample(&mut rng)
        })
        .collect();

    let mut features: Vec<Column> = xs
        .into_iter()
        .enumerate()
        .map(|(j, v)| Column::continuous(format!("x{}", j + 1), v))
        .collect();
    if spec.symbolic {
        let cells: Vec<&str> = groups.iter().map(|&g| levels[g]).collect();
        features.push(Column::symbolic("group", &cells));
    }
    Dataset::new(spec.name.clone(), features, "y", target)
}

/// A corpus of `count` single-input datasets with 200 to 300 rows whose
/// component counts are drawn uniformly from `components` (inclusive range).
pub fn sinusoid_corpus(count: usize, components: (usize, usize), seed: u64) -> Vec<SinusoidSpec> {
    let mut rng = seed::rng(seed);
    (0..count)
        .map(|i| SinusoidSpec {
            name: format!("synth_{i:02}"),
            rows: rng.random_range(200..=300),
            inputs: 1,
            components: rng.random_range(components.0..=components.1),
            noise: 0.05,
            symbolic: false,
            seed: seed::mix(&[seed, i as u64]),
        })
        .collect()
}
