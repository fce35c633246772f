//! Tabular regression datasets: representation, ingestion, admission checks,
//! preprocessing and train/test splitting.
//!
//! A [`Dataset`] holds named feature columns (continuous or symbolic) plus one
//! continuous target. Raw datasets come from CSV or an ARFF subset; a
//! normalized dataset additionally carries the [`Normalizer`] that produced it,
//! so the mapping can be inverted or reapplied to new rows.

mod arff;
mod io;
mod normalize;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub use io::{load_canonical, load_dataset, save_canonical, schema_path, Format, Loaded};
pub use normalize::{normalize, normalize_forced, FeatureTransform, Normalizer, Range};

/// Minimum number of rows for a dataset to enter the corpus.
pub const MIN_ROWS: usize = 100;
/// Minimum number of distinct target values for a dataset to enter the corpus.
pub const MIN_DISTINCT_TARGETS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Continuous,
    Symbolic,
    /// One bit of a one-hot block produced by normalization.
    Indicator,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Continuous(Vec<f64>),
    Symbolic {
        categories: Vec<String>,
        codes: Vec<usize>,
    },
    Indicator {
        source: String,
        category: String,
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

impl Column {
    pub fn continuous(name: impl Into<String>, values: Vec<f64>) -> Self {
        Column {
            name: name.into(),
            data: ColumnData::Continuous(values),
        }
    }

    /// Builds a symbolic column, assigning category ids in order of first
    /// appearance.
    pub fn symbolic<S: AsRef<str>>(name: impl Into<String>, values: &[S]) -> Self {
        let mut categories: Vec<String> = Vec::new();
        let codes = values
            .iter()
            .map(|v| {
                let v = v.as_ref();
                match categories.iter().position(|c| c == v) {
                    Some(i) => i,
                    None => {
                        categories.push(v.to_string());
                        categories.len() - 1
                    }
                }
            })
            .collect();
        Column {
            name: name.into(),
            data: ColumnData::Symbolic { categories, codes },
        }
    }

    pub fn kind(&self) -> ColumnKind {
        match self.data {
            ColumnData::Continuous(_) => ColumnKind::Continuous,
            ColumnData::Symbolic { .. } => ColumnKind::Symbolic,
            ColumnData::Indicator { .. } => ColumnKind::Indicator,
        }
    }

    pub fn len(&self) -> usize {
        match &self.data {
            ColumnData::Continuous(v) => v.len(),
            ColumnData::Symbolic { codes, .. } => codes.len(),
            ColumnData::Indicator { values, .. } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Values of a continuous column.
    pub fn as_continuous(&self) -> Option<&[f64]> {
        match &self.data {
            ColumnData::Continuous(v) => Some(v),
            _ => None,
        }
    }

    /// Numeric view of continuous and indicator columns.
    pub fn numeric_values(&self) -> Option<&[f64]> {
        match &self.data {
            ColumnData::Continuous(v) => Some(v),
            ColumnData::Indicator { values, .. } => Some(values),
            ColumnData::Symbolic { .. } => None,
        }
    }

    /// Text of the cell at `row`, as written to CSV.
    pub fn cell_text(&self, row: usize) -> String {
        match &self.data {
            ColumnData::Continuous(v) => format_f64(v[row]),
            ColumnData::Symbolic { categories, codes } => categories[codes[row]].clone(),
            ColumnData::Indicator { values, .. } => format_f64(values[row]),
        }
    }

    fn select(&self, rows: &[usize]) -> Column {
        let pick = |v: &[f64]| rows.iter().map(|&r| v[r]).collect::<Vec<_>>();
        let data = match &self.data {
            ColumnData::Continuous(v) => ColumnData::Continuous(pick(v)),
            ColumnData::Symbolic { categories, codes } => ColumnData::Symbolic {
                categories: categories.clone(),
                codes: rows.iter().map(|&r| codes[r]).collect(),
            },
            ColumnData::Indicator {
                source,
                category,
                values,
            } => ColumnData::Indicator {
                source: source.clone(),
                category: category.clone(),
                values: pick(values),
            },
        };
        Column {
            name: self.name.clone(),
            data,
        }
    }

    fn validate(&self) -> Result<()> {
        match &self.data {
            ColumnData::Continuous(v) | ColumnData::Indicator { values: v, .. } => {
                if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
                    return Err(Error::invalid(format!(
                        "column `{}` contains non-finite value {bad}",
                        self.name
                    )));
                }
            }
            ColumnData::Symbolic { categories, codes } => {
                if categories.is_empty() {
                    return Err(Error::invalid(format!(
                        "symbolic column `{}` has no categories",
                        self.name
                    )));
                }
                if codes.iter().any(|&c| c >= categories.len()) {
                    return Err(Error::invalid(format!(
                        "symbolic column `{}` references an unknown category id",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }
}

pub fn format_f64(v: f64) -> String {
    // `Display` for f64 prints the shortest string that parses back exactly.
    format!("{v}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub features: Vec<Column>,
    pub target_name: String,
    pub target: Vec<f64>,
    /// Present iff the dataset is normalized.
    pub normalization: Option<Normalizer>,
}

impl Dataset {
    /// Builds a raw dataset, checking column lengths and value validity.
    pub fn new(
        name: impl Into<String>,
        features: Vec<Column>,
        target_name: impl Into<String>,
        target: Vec<f64>,
    ) -> Result<Self> {
        let d = Dataset {
            name: name.into(),
            features,
            target_name: target_name.into(),
            target,
            normalization: None,
        };
        d.validate()?;
        Ok(d)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.target.is_empty() {
            return Err(Error::EmptyDataset(self.name.clone()));
        }
        if let Some(bad) = self.target.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonNumericTarget {
                column: self.target_name.clone(),
                value: bad.to_string(),
            });
        }
        for c in &self.features {
            if c.len() != self.target.len() {
                return Err(Error::invalid(format!(
                    "column `{}` has {} rows, target has {}",
                    c.name,
                    c.len(),
                    self.target.len()
                )));
            }
            c.validate()?;
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalization.is_some()
    }

    pub fn continuous_columns(&self) -> impl Iterator<Item = &Column> {
        self.features.iter().filter(|c| c.kind() == ColumnKind::Continuous)
    }

    pub fn symbolic_columns(&self) -> impl Iterator<Item = &Column> {
        self.features.iter().filter(|c| c.kind() == ColumnKind::Symbolic)
    }

    /// Row subset in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            features: self.features.iter().map(|c| c.select(rows)).collect(),
            target_name: self.target_name.clone(),
            target: rows.iter().map(|&r| self.target[r]).collect(),
            normalization: self.normalization.clone(),
        }
    }

    /// Numeric design matrix (rows × features). Fails on symbolic columns, so
    /// in practice this is only called on normalized datasets.
    pub fn feature_matrix(&self) -> Result<DMatrix<f64>> {
        let cols = self
            .features
            .iter()
            .map(|c| {
                c.numeric_values().ok_or_else(|| {
                    Error::invalid(format!("column `{}` is symbolic; normalize first", c.name))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_fn(self.n_rows(), cols.len(), |i, j| cols[j][i]))
    }

    pub fn target_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.target)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissionReport {
    pub row_count: usize,
    pub distinct_target_values: usize,
    pub admitted: bool,
    pub reasons: Vec<String>,
}

pub fn distinct_count(values: &[f64]) -> usize {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| a == b);
    v.len()
}

/// Corpus admission rule: at least [`MIN_ROWS`] rows and at least
/// [`MIN_DISTINCT_TARGETS`] distinct target values.
pub fn check_admission(d: &Dataset) -> AdmissionReport {
    let row_count = d.n_rows();
    let distinct_target_values = distinct_count(&d.target);
    let mut reasons = Vec::new();
    if row_count < MIN_ROWS {
        reasons.push(format!("row count {row_count} < {MIN_ROWS}"));
    }
    if distinct_target_values < MIN_DISTINCT_TARGETS {
        reasons.push(format!(
            "distinct target values {distinct_target_values} < {MIN_DISTINCT_TARGETS}"
        ));
    }
    AdmissionReport {
        row_count,
        distinct_target_values,
        admitted: reasons.is_empty(),
        reasons,
    }
}

/// Random train/test row partition. The train part holds
/// `round(train_fraction · n)` rows.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    if n < 2 {
        return Err(Error::invalid(format!("cannot split {n} rows")));
    }
    let n_train = (train_fraction * n as f64).round() as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::invalid(format!(
            "train fraction {train_fraction} on {n} rows leaves an empty partition"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut seed::rng(seed));
    let test = perm.split_off(n_train);
    Ok((perm, test))
}

pub fn split_train_test(d: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(d.n_rows(), train_fraction, seed)?;
    Ok((d.select_rows(&train), d.select_rows(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_rows(n: usize, distinct: usize) -> Dataset {
        let target = (0..n).map(|i| (i % distinct) as f64).collect();
        let x = (0..n).map(|i| i as f64).collect();
        Dataset::new("d", vec![Column::continuous("x", x)], "y", target).unwrap()
    }

    #[test]
    fn admission_thresholds() {
        let r = check_admission(&with_rows(99, 50));
        assert!(!r.admitted);
        assert_eq!(r.row_count, 99);
        assert!(r.reasons[0].contains("row count"));

        let r = check_admission(&with_rows(100, 10));
        assert!(r.admitted);
        assert_eq!(r.distinct_target_values, 10);

        let r = check_admission(&with_rows(500, 9));
        assert!(!r.admitted);
        assert_eq!(r.reasons.len(), 1);
        assert!(r.reasons[0].contains("distinct"));
    }

    #[test]
    fn distinct_count_treats_signed_zero_as_equal() {
        assert_eq!(distinct_count(&[0.0, -0.0, 1.0, 1.0]), 2);
    }

    #[test]
    fn split_sizes() {
        let (tr, te) = split_indices(10, 0.7, 1).unwrap();
        assert_eq!((tr.len(), te.len()), (7, 3));
        let (tr, te) = split_indices(2, 0.7, 99).unwrap();
        assert_eq!((tr.len(), te.len()), (1, 1));
    }

    #[test]
    fn split_is_deterministic_and_partitions() {
        let a = split_indices(50, 0.7, 42).unwrap();
        let b = split_indices(50, 0.7, 42).unwrap();
        assert_eq!(a, b);
        let mut all: Vec<usize> = a.0.iter().chain(a.1.iter()).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..50).collect::<Vec<_>>());
        assert_ne!(a, split_indices(50, 0.7, 43).unwrap());
    }

    #[test]
    fn split_rejects_empty_partitions() {
        assert!(split_indices(3, 0.1, 0).is_err());
        assert!(split_indices(3, 0.9, 0).is_err());
        assert!(split_indices(1, 0.5, 0).is_err());
        assert!(split_indices(10, 1.0, 0).is_err());
        assert!(split_indices(10, 0.0, 0).is_err());
    }

    #[test]
    fn split_train_test_keeps_rows_aligned() {
        let d = with_rows(20, 20);
        let (tr, te) = split_train_test(&d, 0.7, 5).unwrap();
        for part in [&tr, &te] {
            let x = part.features[0].as_continuous().unwrap();
            for (xi, ti) in x.iter().zip(&part.target) {
                assert_eq!(*xi as usize % 20, *ti as usize);
            }
        }
    }

    #[test]
    fn new_rejects_ragged_columns() {
        let err = Dataset::new("d", vec![Column::continuous("x", vec![1.0])], "y", vec![1.0, 2.0]);
        assert!(err.is_err());
        let err = Dataset::new("d", vec![], "y", vec![]);
        assert!(matches!(err, Err(Error::EmptyDataset(_))));
    }

    #[test]
    fn symbolic_categories_in_first_appearance_order() {
        let c = Column::symbolic("c", &["b", "a", "b", "c"]);
        match c.data {
            ColumnData::Symbolic { categories, codes } => {
                assert_eq!(categories, vec!["b", "a", "c"]);
                assert_eq!(codes, vec![0, 1, 0, 2]);
            }
            _ => unreachable!(),
        }
    }
}
