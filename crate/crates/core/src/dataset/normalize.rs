use serde::{Deserialize, Serialize};

use super::{Column, ColumnData, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub fn of(values: &[f64]) -> Range {
        values.iter().fold(
            Range {
                min: f64::INFINITY,
                max: f64::NEG_INFINITY,
            },
            |r, &v| Range {
                min: r.min.min(v),
                max: r.max.max(v),
            },
        )
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    /// Affine map onto [-1, 1]; a constant range maps everything to 0.
    pub fn to_symmetric(&self, v: f64) -> f64 {
        if self.max > self.min {
            2.0 * (v - self.min) / self.width() - 1.0
        } else {
            0.0
        }
    }

    /// Affine map onto [0, 1]; a constant range maps everything to 0.
    pub fn to_unit(&self, v: f64) -> f64 {
        if self.max > self.min {
            (v - self.min) / self.width()
        } else {
            0.0
        }
    }

    pub fn from_unit(&self, u: f64) -> f64 {
        u * self.width() + self.min
    }
}

/// How one raw feature column is mapped into normalized space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "transform", rename_all = "snake_case")]
pub enum FeatureTransform {
    /// Continuous column mapped affinely onto [-1, 1].
    Affine { column: String, range: Range },
    /// Symbolic column expanded into one indicator per observed category.
    OneHot { column: String, categories: Vec<String> },
    /// Indicator column copied unchanged.
    Passthrough { column: String },
}

/// Fitted normalization parameters. Serializable so that the mapping can be
/// inverted and reapplied to rows that were not seen at fit time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub features: Vec<FeatureTransform>,
    pub target: Range,
}

impl Normalizer {
    pub fn fit(d: &Dataset) -> Result<Normalizer> {
        let target = Range::of(&d.target);
        if !(target.max > target.min) {
            return Err(Error::ConstantTarget(d.name.clone()));
        }
        let features = d
            .features
            .iter()
            .map(|c| match &c.data {
                ColumnData::Continuous(v) => FeatureTransform::Affine {
                    column: c.name.clone(),
                    range: Range::of(v),
                },
                ColumnData::Symbolic { categories, codes } => {
                    let mut seen = vec![false; categories.len()];
                    for &code in codes {
                        seen[code] = true;
                    }
                    FeatureTransform::OneHot {
                        column: c.name.clone(),
                        categories: categories
                            .iter()
                            .zip(seen)
                            .filter(|(_, s)| *s)
                            .map(|(cat, _)| cat.clone())
                            .collect(),
                    }
                }
                ColumnData::Indicator { .. } => FeatureTransform::Passthrough {
                    column: c.name.clone(),
                },
            })
            .collect();
        Ok(Normalizer { features, target })
    }

    /// Applies the fitted mapping to a dataset with the same column layout.
    pub fn apply(&self, d: &Dataset) -> Result<Dataset> {
        if d.features.len() != self.features.len() {
            return Err(Error::DimensionMismatch {
                expected: self.features.len(),
                actual: d.features.len(),
            });
        }
        let mut features = Vec::new();
        for (t, c) in self.features.iter().zip(&d.features) {
            match (t, &c.data) {
                (FeatureTransform::Affine { column, range }, ColumnData::Continuous(v))
                    if *column == c.name =>
                {
                    let mapped = v.iter().map(|&x| range.to_symmetric(x)).collect();
                    features.push(Column::continuous(column.clone(), mapped));
                }
                (
                    FeatureTransform::OneHot { column, categories },
                    ColumnData::Symbolic {
                        categories: dict,
                        codes,
                    },
                ) if *column == c.name => {
                    // Position of each dictionary entry in the one-hot block.
                    let slot = dict
                        .iter()
                        .map(|name| categories.iter().position(|k| k == name))
                        .collect::<Vec<_>>();
                    for &code in codes {
                        if slot[code].is_none() {
                            return Err(Error::UnknownCategory {
                                column: column.clone(),
                                category: dict[code].clone(),
                            });
                        }
                    }
                    for (k, cat) in categories.iter().enumerate() {
                        let bits = codes
                            .iter()
                            .map(|&code| if slot[code] == Some(k) { 1.0 } else { 0.0 })
                            .collect();
                        features.push(Column {
                            name: format!("{column}={cat}"),
                            data: ColumnData::Indicator {
                                source: column.clone(),
                                category: cat.clone(),
                                values: bits,
                            },
                        });
                    }
                }
                (FeatureTransform::Passthrough { column }, ColumnData::Indicator { .. })
                    if *column == c.name =>
                {
                    features.push(c.clone());
                }
                _ => {
                    return Err(Error::Schema(format!(
                        "column `{}` does not match the fitted normalization layout",
                        c.name
                    )))
                }
            }
        }
        Ok(Dataset {
            name: d.name.clone(),
            features,
            target_name: d.target_name.clone(),
            target: d.target.iter().map(|&t| self.target.to_unit(t)).collect(),
            normalization: Some(self.clone()),
        })
    }

    /// Maps normalized target values back to the original scale.
    pub fn denormalize_target(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|&u| self.target.from_unit(u)).collect()
    }
}

/// Normalizes a raw dataset: continuous features to [-1, 1], target to
/// [0, 1], symbolic features to one-hot indicator blocks.
pub fn normalize(d: &Dataset) -> Result<Dataset> {
    if d.is_normalized() {
        return Err(Error::AlreadyNormalized(d.name.clone()));
    }
    normalize_forced(d)
}

/// Like [`normalize`] but also accepts an already-normalized dataset, whose
/// values are then left unchanged up to rounding.
pub fn normalize_forced(d: &Dataset) -> Result<Dataset> {
    Normalizer::fit(d)?.apply(d)
}
