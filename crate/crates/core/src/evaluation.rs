//! Leave-one-out evaluation of meta-learners.

use std::io::Write;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::format_f64;
use crate::error::{Error, Result};
use crate::meta_learners::{fit, LearnerSpec};
use crate::metabase::MetaBase;
use crate::stats;

/// A metric value plus a flag set when its denominator vanished.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub value: f64,
    pub degenerate: bool,
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: a, actual: b });
    }
    Ok(())
}

/// Relative absolute error in percent against per-example baselines.
pub fn rae(predictions: &[f64], actuals: &[f64], baselines: &[f64]) -> Result<Metric> {
    check_lengths(actuals.len(), predictions.len())?;
    check_lengths(actuals.len(), baselines.len())?;
    if actuals.is_empty() {
        return Err(Error::invalid("rae of an empty sequence"));
    }
    let num: f64 = predictions.iter().zip(actuals).map(|(p, a)| (p - a).abs()).sum();
    let den: f64 = baselines.iter().zip(actuals).map(|(b, a)| (b - a).abs()).sum();
    if den == 0.0 {
        return Ok(Metric {
            value: 0.0,
            degenerate: true,
        });
    }
    Ok(Metric {
        value: 100.0 * num / den,
        degenerate: false,
    })
}

/// Sample Pearson correlation; 0 with the degenerate flag when either side
/// has no variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<Metric> {
    check_lengths(xs.len(), ys.len())?;
    if xs.len() < 2 {
        return Err(Error::invalid("pearson needs at least two pairs"));
    }
    Ok(match stats::pearson(xs, ys) {
        Some(value) => Metric {
            value,
            degenerate: false,
        },
        None => Metric {
            value: 0.0,
            degenerate: true,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooRow {
    pub dataset: String,
    pub actual: f64,
    pub predicted: f64,
    /// Mean label of the other examples.
    pub baseline: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooReport {
    pub learner: String,
    pub spec: LearnerSpec,
    pub extractor_hash: String,
    pub rows: Vec<LooRow>,
    pub rae_percent: f64,
    pub rae_degenerate: bool,
    pub pearson_correlation: f64,
    pub correlation_degenerate: bool,
}

/// One held-out prediction: fit on everything but `index`, predict it.
pub fn loo_fold(spec: &LearnerSpec, mb: &MetaBase, index: usize) -> Result<LooRow> {
    let train = mb.without(index);
    let model = fit(spec, &train)?;
    let held = &mb.examples[index];
    let predicted = model.predict_raw(&held.features, &mb.header.extractor_hash)?;
    Ok(LooRow {
        dataset: held.dataset.clone(),
        actual: held.label as f64,
        predicted,
        baseline: DVector::from_vec(train.labels()).mean(),
    })
}

/// Leave-one-out over the whole meta-base. Folds run in parallel on the
/// current rayon pool; results are collected in meta-base order.
pub fn loo_evaluate(spec: &LearnerSpec, mb: &MetaBase) -> Result<LooReport> {
    spec.validate()?;
    if mb.len() < 3 {
        return Err(Error::invalid(format!(
            "leave-one-out needs at least 3 meta-examples, got {}",
            mb.len()
        )));
    }
    let rows = (0..mb.len())
        .into_par_iter()
        .map(|i| loo_fold(spec, mb, i))
        .collect::<Result<Vec<_>>>()?;
    let predicted: Vec<f64> = rows.iter().map(|r| r.predicted).collect();
    let actual: Vec<f64> = rows.iter().map(|r| r.actual).collect();
    let baseline: Vec<f64> = rows.iter().map(|r| r.baseline).collect();
    let e = rae(&predicted, &actual, &baseline)?;
    let r = pearson(&predicted, &actual)?;
    Ok(LooReport {
        learner: spec.id(),
        spec: spec.clone(),
        extractor_hash: mb.header.extractor_hash.clone(),
        rows,
        rae_percent: e.value,
        rae_degenerate: e.degenerate,
        pearson_correlation: r.value,
        correlation_degenerate: r.degenerate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub method: String,
    pub rae_percent: f64,
    pub correlation: f64,
}

/// Reports ranked by ascending RAE; equal RAEs keep their input order.
pub fn compare_report(reports: &[LooReport]) -> Vec<RankRow> {
    let mut rows: Vec<RankRow> = reports
        .iter()
        .map(|r| RankRow {
            method: r.learner.clone(),
            rae_percent: r.rae_percent,
            correlation: r.pearson_correlation,
        })
        .collect();
    rows.sort_by(|a, b| a.rae_percent.total_cmp(&b.rae_percent));
    rows
}

/// Writes the ranking as `method,rae_percent,correlation` CSV.
pub fn write_ranking_csv<W: Write>(rows: &[RankRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "rae_percent", "correlation"])?;
    for r in rows {
        w.write_record([r.method.clone(), format_f64(r.rae_percent), format_f64(r.correlation)])?;
    }
    w.flush().map_err(|e| Error::io("<ranking csv>", e))?;
    Ok(())
}
