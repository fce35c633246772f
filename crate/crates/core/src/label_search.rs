//! Exhaustive search for the best hidden-neuron count of one dataset.
//!
//! Every `(hidden, repetition)` cell of the grid is an independent task whose
//! seed is derived from `(base_seed, dataset name, hidden, repetition)`, so the
//! result is the same for any worker count or scheduling order.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{split_indices, Dataset};
use crate::elm::{rmse, ElmModel};
use crate::error::{Error, Result};
use crate::seed;
use crate::stats::{mean, sample_std};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub repetitions: usize,
    pub train_fraction: f64,
    pub base_seed: u64,
    /// Draw a fresh train/test split for every repetition instead of one
    /// split per dataset.
    #[serde(default)]
    pub resplit_per_repetition: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            n_min: 1,
            n_max: 300,
            repetitions: 10,
            train_fraction: 0.7,
            base_seed: 0,
            resplit_per_repetition: false,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_min < 1 || self.n_min > self.n_max {
            return Err(Error::invalid(format!(
                "hidden range [{}, {}] must satisfy 1 <= n_min <= n_max",
                self.n_min, self.n_max
            )));
        }
        if self.repetitions < 1 {
            return Err(Error::invalid("repetitions must be at least 1"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::invalid(format!(
                "train fraction {} outside (0, 1)",
                self.train_fraction
            )));
        }
        Ok(())
    }

    pub fn hidden_counts(&self) -> std::ops::RangeInclusive<usize> {
        self.n_min..=self.n_max
    }
}

/// Test-RMSE statistics for one hidden-neuron count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountStats {
    pub hidden: usize,
    /// `None` when every repetition failed.
    pub mean_rmse: Option<f64>,
    pub std_rmse: Option<f64>,
    pub completed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub dataset: String,
    pub per_count: Vec<CountStats>,
    pub best_count: usize,
    pub min_mean_rmse: f64,
    pub config: SweepConfig,
}

/// Argmin of the mean test RMSE; ties go to the smaller count and counts with
/// no completed repetition are skipped.
pub fn select_best(per_count: &[CountStats]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for c in per_count {
        if let Some(m) = c.mean_rmse {
            let better = match best {
                None => true,
                Some((h, b)) => m < b || (m == b && c.hidden < h),
            };
            if better {
                best = Some((c.hidden, m));
            }
        }
    }
    best
}

struct Split {
    x_train: DMatrix<f64>,
    t_train: DVector<f64>,
    x_test: DMatrix<f64>,
    t_test: Vec<f64>,
}

fn make_split(x: &DMatrix<f64>, t: &[f64], fraction: f64, seed: u64) -> Result<Split> {
    let (train, test) = split_indices(t.len(), fraction, seed)?;
    Ok(Split {
        x_train: x.select_rows(train.iter()),
        t_train: DVector::from_iterator(train.len(), train.iter().map(|&i| t[i])),
        x_test: x.select_rows(test.iter()),
        t_test: test.iter().map(|&i| t[i]).collect(),
    })
}

fn evaluate_cell(split: &Split, hidden: usize, seed: u64) -> Result<f64> {
    let model = ElmModel::fit(&split.x_train, &split.t_train, hidden, seed)?;
    let pred = model.predict(&split.x_test)?;
    let score = rmse(&pred, &split.t_test)?;
    if score.value.is_finite() {
        Ok(score.value)
    } else {
        Err(Error::Numerical("non-finite test RMSE".into()))
    }
}

/// Sweeps every hidden count in `[n_min, n_max]` on a normalized dataset.
///
/// Runs on the current rayon pool; see [`with_workers`] to bound it.
pub fn run_sweep(d: &Dataset, cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    if !d.is_normalized() {
        return Err(Error::NotNormalized(d.name.clone()));
    }
    let x = d.feature_matrix()?;
    let splits: Vec<Split> = if cfg.resplit_per_repetition {
        (0..cfg.repetitions)
            .map(|r| {
                let s = seed::split_seed(cfg.base_seed, &d.name, Some(r));
                make_split(&x, &d.target, cfg.train_fraction, s)
            })
            .collect::<Result<_>>()?
    } else {
        let s = seed::split_seed(cfg.base_seed, &d.name, None);
        vec![make_split(&x, &d.target, cfg.train_fraction, s)?]
    };

    let reps = cfg.repetitions;
    let cells: Vec<(usize, usize)> = cfg
        .hidden_counts()
        .flat_map(|h| (0..reps).map(move |r| (h, r)))
        .collect();
    let scores: Vec<Result<f64>> = cells
        .par_iter()
        .map(|&(h, r)| {
            let split = &splits[if cfg.resplit_per_repetition { r } else { 0 }];
            evaluate_cell(split, h, seed::training_seed(cfg.base_seed, &d.name, h, r))
        })
        .collect();

    let per_count: Vec<CountStats> = cfg
        .hidden_counts()
        .zip(scores.chunks(reps))
        .map(|(hidden, chunk)| {
            let ok: Vec<f64> = chunk.iter().filter_map(|s| s.as_ref().ok().copied()).collect();
            let failed = chunk.len() - ok.len();
            if failed > 0 {
                log::warn!("{}: {failed} repetition(s) failed at hidden={hidden}", d.name);
            }
            CountStats {
                hidden,
                mean_rmse: (!ok.is_empty()).then(|| mean(&ok)),
                std_rmse: (!ok.is_empty()).then(|| sample_std(&ok)),
                completed: ok.len(),
                failed,
            }
        })
        .collect();

    let (best_count, min_mean_rmse) = select_best(&per_count).ok_or_else(|| {
        Error::Numerical(format!("{}: every training in the sweep failed", d.name))
    })?;
    Ok(SweepResult {
        dataset: d.name.clone(),
        per_count,
        best_count,
        min_mean_rmse,
        config: cfg.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub dataset: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSweep {
    pub results: Vec<SweepResult>,
    pub failures: Vec<SweepFailure>,
}

/// Sweeps each dataset in input order. A failing dataset is recorded and
/// does not stop the others.
pub fn sweep_corpus(corpus: &[Dataset], cfg: &SweepConfig) -> Result<CorpusSweep> {
    if corpus.is_empty() {
        return Err(Error::invalid("empty corpus"));
    }
    cfg.validate()?;
    let mut out = CorpusSweep {
        results: Vec::new(),
        failures: Vec::new(),
    };
    for d in corpus {
        match run_sweep(d, cfg) {
            Ok(r) => out.results.push(r),
            Err(e) => {
                log::warn!("sweep of `{}` failed: {e}", d.name);
                out.failures.push(SweepFailure {
                    dataset: d.name.clone(),
                    error: e.to_string(),
                });
            }
        }
    }
    Ok(out)
}

/// Runs `f` on a dedicated pool with `workers` threads (0 means rayon's
/// default).
pub fn with_workers<T, F>(workers: usize, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub start: usize,
    pub end: usize,
    pub count: usize,
}

/// Counts labels in consecutive bins of `bin_width` covering
/// `[n_min, n_max]`; the last bin is truncated at `n_max`.
pub fn label_histogram(labels: &[usize], n_min: usize, n_max: usize, bin_width: usize) -> Result<Vec<HistogramBin>> {
    if bin_width < 1 {
        return Err(Error::invalid("bin width must be at least 1"));
    }
    if n_min > n_max {
        return Err(Error::invalid(format!("empty label range [{n_min}, {n_max}]")));
    }
    let mut bins: Vec<HistogramBin> = (n_min..=n_max)
        .step_by(bin_width)
        .map(|start| HistogramBin {
            start,
            end: (start + bin_width - 1).min(n_max),
            count: 0,
        })
        .collect();
    for &label in labels {
        if label < n_min || label > n_max {
            return Err(Error::invalid(format!(
                "label {label} outside [{n_min}, {n_max}]"
            )));
        }
        bins[(label - n_min) / bin_width].count += 1;
    }
    Ok(bins)
}

/// Histogram of the best counts of a set of sweeps over the given range.
pub fn sweep_histogram(results: &[SweepResult], n_min: usize, n_max: usize, bin_width: usize) -> Result<Vec<HistogramBin>> {
    let labels: Vec<usize> = results.iter().map(|r| r.best_count).collect();
    label_histogram(&labels, n_min, n_max, bin_width)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(hidden: usize, mean: Option<f64>) -> CountStats {
        CountStats {
            hidden,
            mean_rmse: mean,
            std_rmse: mean.map(|_| 0.0),
            completed: mean.map_or(0, |_| 1),
            failed: mean.map_or(1, |_| 0),
        }
    }

    #[test]
    fn tie_goes_to_smaller_count() {
        let pc = vec![stats(1, Some(0.5)), stats(2, Some(0.2)), stats(3, Some(0.2)), stats(4, Some(0.3))];
        assert_eq!(select_best(&pc), Some((2, 0.2)));
        let rev: Vec<_> = pc.into_iter().rev().collect();
        assert_eq!(select_best(&rev), Some((2, 0.2)));
    }

    #[test]
    fn fully_failed_counts_are_skipped() {
        let pc = vec![stats(1, None), stats(2, Some(0.9)), stats(3, None)];
        assert_eq!(select_best(&pc), Some((2, 0.9)));
        assert_eq!(select_best(&[stats(1, None)]), None);
    }

    #[test]
    fn config_validation() {
        assert!(SweepConfig::default().validate().is_ok());
        let bad = |f: fn(&mut SweepConfig)| {
            let mut c = SweepConfig::default();
            f(&mut c);
            c.validate().is_err()
        };
        assert!(bad(|c| c.n_min = 0));
        assert!(bad(|c| c.n_min = 301));
        assert!(bad(|c| c.repetitions = 0));
        assert!(bad(|c| c.train_fraction = 1.0));
    }

    #[test]
    fn histogram_example() {
        let bins = label_histogram(&[4, 32, 215, 142], 1, 300, 50).unwrap();
        let counts: Vec<_> = bins.iter().map(|b| (b.start, b.end, b.count)).collect();
        assert_eq!(
            counts,
            vec![(1, 50, 2), (51, 100, 0), (101, 150, 1), (151, 200, 0), (201, 250, 1), (251, 300, 0)]
        );
    }

    #[test]
    fn histogram_edge_cases() {
        let empty = label_histogram(&[], 1, 300, 50).unwrap();
        assert_eq!(empty.len(), 6);
        assert!(empty.iter().all(|b| b.count == 0));
        let single = label_histogram(&[3, 300, 150], 1, 300, 300).unwrap();
        assert_eq!(single, vec![HistogramBin { start: 1, end: 300, count: 3 }]);
        let ragged = label_histogram(&[7], 1, 7, 3).unwrap();
        assert_eq!(ragged.last().unwrap(), &HistogramBin { start: 7, end: 7, count: 1 });
        assert!(label_histogram(&[1], 1, 10, 0).is_err());
        assert!(label_histogram(&[11], 1, 10, 5).is_err());
    }
}
