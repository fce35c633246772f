//! The 16 meta-features describing a raw regression dataset.
//!
//! All extractors run on the raw (pre-normalization) data. Degenerate
//! sub-features (zero variance, no eligible columns, ...) contribute 0 and
//! add a [`MetaWarning`] instead of aborting the extraction.

use std::cmp::Ordering;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnData, Dataset};
use crate::error::{Error, Result};
use crate::linalg::{lstsq_min_norm, with_intercept, REL_RANK_TOL};
use crate::seed::hex_digest;
use crate::stats::{self, central_moment, is_degenerate, mean, pop_std, quantile_sorted, sorted_copy};

pub const N_META_FEATURES: usize = 16;

/// Column names of the meta-feature vector, in storage order.
pub const FEATURE_NAMES: [&str; N_META_FEATURES] = [
    "mean_skewness",
    "mean_kurtosis",
    "mean_abs_skewness",
    "max_mean_neighbor_target_distance",
    "max_abs_attr_target_correlation",
    "n_attributes",
    "n_examples",
    "n_continuous_with_outliers",
    "prop_continuous_with_outliers",
    "r2_numeric_only",
    "r2_with_binarized",
    "abs_cv_width_category",
    "cv_width_category",
    "target_has_outliers",
    "outlier_severity",
    "stddev_exceeds_mean",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetaFeatureVector(pub [f64; N_META_FEATURES]);

impl MetaFeatureVector {
    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let arr: [f64; N_META_FEATURES] = values.try_into().map_err(|_| Error::DimensionMismatch {
            expected: N_META_FEATURES,
            actual: values.len(),
        })?;
        Ok(MetaFeatureVector(arr))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES.iter().position(|n| *n == name).map(|i| self.0[i])
    }
}

/// Tunable parts of the extractor. Its hash is recorded in every meta-base so
/// prediction-time extraction can be checked against training time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractorConfig {
    /// Coefficient of variation at which the target counts as sparse.
    pub cv_sparse: f64,
    /// Coefficient of variation at which the target counts as extremely sparse.
    pub cv_extreme: f64,
    /// Tukey fence multiplier on the interquartile range.
    pub outlier_factor: f64,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        ExtractorConfig {
            cv_sparse: 0.5,
            cv_extreme: 1.0,
            outlier_factor: 1.5,
        }
    }
}

impl ExtractorConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.cv_sparse.is_finite()
            && self.cv_extreme.is_finite()
            && 0.0 <= self.cv_sparse
            && self.cv_sparse <= self.cv_extreme
            && self.outlier_factor.is_finite()
            && self.outlier_factor >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid extractor config {self:?}")))
        }
    }

    pub fn config_hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex_digest(&json)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "code", rename_all = "snake_case")]
pub enum MetaWarning {
    ZeroVariance { column: String },
    NoContinuousAttributes,
    NoCorrelationCandidates,
    R2NoColumns { binarized: bool },
    R2Underdetermined { binarized: bool },
    R2ConstantTarget { binarized: bool },
}

impl fmt::Display for MetaWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = |b: &bool| if *b { "binarized" } else { "numeric" };
        match self {
            MetaWarning::ZeroVariance { column } => write!(f, "zero_variance({column})"),
            MetaWarning::NoContinuousAttributes => f.write_str("no_continuous_attributes"),
            MetaWarning::NoCorrelationCandidates => f.write_str("no_correlation_candidates"),
            MetaWarning::R2NoColumns { binarized } => write!(f, "r2_no_columns({})", tag(binarized)),
            MetaWarning::R2Underdetermined { binarized } => {
                write!(f, "r2_underdetermined({})", tag(binarized))
            }
            MetaWarning::R2ConstantTarget { binarized } => {
                write!(f, "r2_constant_target({})", tag(binarized))
            }
        }
    }
}

/// Sample skewness `m3 / m2^{3/2}`; `None` for fewer than three values or no
/// spread.
pub fn skewness(xs: &[f64]) -> Option<f64> {
    if xs.len() < 3 || is_degenerate(xs) {
        return None;
    }
    let m2 = central_moment(xs, 2);
    Some(central_moment(xs, 3) / m2.powf(1.5))
}

/// Excess kurtosis `m4 / m2² - 3`; `None` under the same conditions as
/// [`skewness`].
pub fn kurtosis(xs: &[f64]) -> Option<f64> {
    if xs.len() < 3 || is_degenerate(xs) {
        return None;
    }
    let m2 = central_moment(xs, 2);
    Some(central_moment(xs, 4) / (m2 * m2) - 3.0)
}

/// Largest mean distance between a sorted target value and its neighbours.
/// Endpoints have a single neighbour.
pub fn max_mean_neighbor_distance(target: &[f64]) -> f64 {
    let s = sorted_copy(target);
    let n = s.len();
    if n < 2 {
        return 0.0;
    }
    (0..n)
        .map(|i| {
            if i == 0 {
                s[1] - s[0]
            } else if i == n - 1 {
                s[n - 1] - s[n - 2]
            } else {
                ((s[i] - s[i - 1]) + (s[i + 1] - s[i])) / 2.0
            }
        })
        .fold(0.0, f64::max)
}

/// Max |Pearson(attribute, target)| over continuous attributes with spread.
/// `None` if no attribute qualifies.
pub fn max_attr_target_correlation(d: &Dataset) -> Option<f64> {
    d.continuous_columns()
        .filter_map(|c| stats::pearson(c.as_continuous()?, &d.target))
        .map(f64::abs)
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r))))
}

/// Tukey fences `(Q1 - k·IQR, Q3 + k·IQR, IQR)`.
pub fn tukey_fences(xs: &[f64], factor: f64) -> Option<(f64, f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let s = sorted_copy(xs);
    let q1 = quantile_sorted(&s, 0.25);
    let q3 = quantile_sorted(&s, 0.75);
    let iqr = q3 - q1;
    Some((q1 - factor * iqr, q3 + factor * iqr, iqr))
}

pub fn has_outliers(xs: &[f64], factor: f64) -> bool {
    match tukey_fences(xs, factor) {
        Some((lo, hi, _)) => xs.iter().any(|&x| x < lo || x > hi),
        None => false,
    }
}

/// Largest excess beyond the nearer fence, in IQR units.
pub fn outlier_severity(xs: &[f64], factor: f64) -> f64 {
    match tukey_fences(xs, factor) {
        Some((lo, hi, iqr)) if iqr > 0.0 => xs
            .iter()
            .map(|&x| {
                if x < lo {
                    (lo - x) / iqr
                } else if x > hi {
                    (x - hi) / iqr
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max),
        _ => 0.0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutlierSummary {
    /// One flag per continuous attribute, in column order.
    pub attribute_flags: Vec<bool>,
    pub target_has_outliers: bool,
    pub severity: f64,
}

pub fn outlier_flags(d: &Dataset, factor: f64) -> OutlierSummary {
    OutlierSummary {
        attribute_flags: d
            .continuous_columns()
            .map(|c| has_outliers(c.as_continuous().unwrap_or(&[]), factor))
            .collect(),
        target_has_outliers: has_outliers(&d.target, factor),
        severity: outlier_severity(&d.target, factor),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RSquared {
    pub value: f64,
    pub warning: Option<MetaWarning>,
}

/// Design matrix for the R² features: continuous columns, plus one indicator
/// per category of each symbolic column when `include_binarized`.
fn r2_design(d: &Dataset, include_binarized: bool) -> DMatrix<f64> {
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for c in &d.features {
        match &c.data {
            ColumnData::Continuous(v) => cols.push(v.clone()),
            ColumnData::Indicator { values, .. } => cols.push(values.clone()),
            ColumnData::Symbolic { categories, codes } if include_binarized => {
                // Sorted by name so the layout does not depend on row order.
                let mut order: Vec<usize> = (0..categories.len()).collect();
                order.sort_by(|&a, &b| categories[a].cmp(&categories[b]));
                for k in order {
                    if codes.contains(&k) {
                        cols.push(codes.iter().map(|&c| if c == k { 1.0 } else { 0.0 }).collect());
                    }
                }
            }
            ColumnData::Symbolic { .. } => {}
        }
    }
    DMatrix::from_fn(d.n_rows(), cols.len(), |i, j| cols[j][i])
}

/// Coefficient of determination of an OLS fit (with intercept) of the target
/// on the numeric columns, optionally plus the binarized symbolic ones.
/// Clamped to [0, 1].
pub fn r_squared(d: &Dataset, include_binarized: bool) -> RSquared {
    let binarized = include_binarized;
    let x = r2_design(d, include_binarized);
    let n = d.n_rows();
    if x.ncols() == 0 {
        return RSquared {
            value: 0.0,
            warning: Some(MetaWarning::R2NoColumns { binarized }),
        };
    }
    if n <= x.ncols() {
        return RSquared {
            value: 1.0,
            warning: Some(MetaWarning::R2Underdetermined { binarized }),
        };
    }
    if is_degenerate(&d.target) {
        return RSquared {
            value: 0.0,
            warning: Some(MetaWarning::R2ConstantTarget { binarized }),
        };
    }
    let t = DVector::from_column_slice(&d.target);
    let design = with_intercept(&x);
    let value = match lstsq_min_norm(&design, &t, REL_RANK_TOL) {
        Ok(sol) => {
            let resid = &t - &design * &sol.coef;
            let ss_res = resid.norm_squared();
            let m = mean(&d.target);
            let ss_tot: f64 = d.target.iter().map(|y| (y - m).powi(2)).sum();
            (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
        }
        Err(_) => 0.0,
    };
    RSquared {
        value,
        warning: None,
    }
}

/// Sparsity level of the target's coefficient of variation: 0 below
/// `cv_sparse`, 1 below `cv_extreme`, else 2. A zero mean counts as 2.
pub fn cv_width_category(target: &[f64], absolute: bool, cfg: &ExtractorConfig) -> u8 {
    let t: Vec<f64> = if absolute {
        target.iter().map(|v| v.abs()).collect()
    } else {
        target.to_vec()
    };
    let m = mean(&t).abs();
    if m == 0.0 {
        return 2;
    }
    let cv = pop_std(&t) / m;
    if cv < cfg.cv_sparse {
        0
    } else if cv < cfg.cv_extreme {
        1
    } else {
        2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub features: MetaFeatureVector,
    pub warnings: Vec<MetaWarning>,
}

fn cmp_rows(d: &Dataset, a: usize, b: usize) -> Ordering {
    d.target[a].total_cmp(&d.target[b]).then_with(|| {
        d.features
            .iter()
            .map(|c| match &c.data {
                ColumnData::Continuous(v) | ColumnData::Indicator { values: v, .. } => {
                    v[a].total_cmp(&v[b])
                }
                ColumnData::Symbolic { categories, codes } => {
                    categories[codes[a]].cmp(&categories[codes[b]])
                }
            })
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

/// Computes the 16 meta-features of a raw dataset.
///
/// Rows are put into a canonical order first, so the result is bitwise
/// independent of the input row order.
pub fn extract_meta_features(d: &Dataset, cfg: &ExtractorConfig) -> Result<Extraction> {
    if d.is_normalized() {
        return Err(Error::invalid(format!(
            "meta-features are extracted from raw data; `{}` is normalized",
            d.name
        )));
    }
    cfg.validate()?;
    let mut order: Vec<usize> = (0..d.n_rows()).collect();
    order.sort_by(|&a, &b| cmp_rows(d, a, b));
    let d = d.select_rows(&order);

    let mut warnings = Vec::new();
    let mut skews = Vec::new();
    let mut kurts = Vec::new();
    let mut n_continuous = 0usize;
    for c in d.continuous_columns() {
        n_continuous += 1;
        let v = c.as_continuous().unwrap_or(&[]);
        match (skewness(v), kurtosis(v)) {
            (Some(s), Some(k)) => {
                skews.push(s);
                kurts.push(k);
            }
            _ => {
                warnings.push(MetaWarning::ZeroVariance {
                    column: c.name.clone(),
                });
                skews.push(0.0);
                kurts.push(0.0);
            }
        }
    }
    if n_continuous == 0 {
        warnings.push(MetaWarning::NoContinuousAttributes);
    }
    let abs_skews: Vec<f64> = skews.iter().map(|s| s.abs()).collect();

    let correlation = match max_attr_target_correlation(&d) {
        Some(r) => r,
        None => {
            if n_continuous > 0 {
                warnings.push(MetaWarning::NoCorrelationCandidates);
            }
            0.0
        }
    };

    let outliers = outlier_flags(&d, cfg.outlier_factor);
    let n_outlying = outliers.attribute_flags.iter().filter(|&&f| f).count();

    let r2_numeric = r_squared(&d, false);
    let r2_binarized = r_squared(&d, true);
    warnings.extend(r2_numeric.warning.clone());
    warnings.extend(r2_binarized.warning.clone());

    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    let values = [
        mean(&skews),
        mean(&kurts),
        mean(&abs_skews),
        max_mean_neighbor_distance(&d.target),
        correlation,
        d.features.len() as f64,
        d.n_rows() as f64,
        n_outlying as f64,
        n_outlying as f64 / n_continuous.max(1) as f64,
        r2_numeric.value,
        r2_binarized.value,
        cv_width_category(&d.target, true, cfg) as f64,
        cv_width_category(&d.target, false, cfg) as f64,
        flag(outliers.target_has_outliers),
        outliers.severity,
        flag(pop_std(&d.target) > mean(&d.target)),
    ];
    Ok(Extraction {
        features: MetaFeatureVector(values),
        warnings,
    })
}
