//! Regressors mapping meta-features to a hidden-neuron count.
//!
//! Four families are provided: 1-nearest-neighbour, ordinary least squares,
//! an M5 model tree and ε-insensitive support-vector regression with
//! polynomial or RBF kernels. A constant-mean predictor is included as the
//! naive baseline. Every fitted model stores the min-max scaling learned on
//! its training meta-features and the extractor hash of the meta-base it was
//! trained on.

mod knn;
mod linear;
pub mod m5;
pub mod svr;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metabase::MetaBase;
use crate::meta_features::MetaFeatureVector;

pub use knn::NearestNeighbor;
pub use linear::{fit_ols, LinearModel, RIDGE_LAMBDA};
pub use m5::{M5Node, M5Params, M5Tree};
pub use svr::{Kernel, SvrModel, SvrParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum LearnerSpec {
    /// Predicts the training-label mean.
    Mean,
    Knn1,
    Linear,
    M5(M5Params),
    Svr(SvrParams),
}

impl LearnerSpec {
    /// Short stable identifier used in reports and file names.
    pub fn id(&self) -> String {
        match self {
            LearnerSpec::Mean => "mean".into(),
            LearnerSpec::Knn1 => "knn1".into(),
            LearnerSpec::Linear => "linear".into(),
            LearnerSpec::M5(_) => "m5".into(),
            LearnerSpec::Svr(p) => match p.kernel {
                Kernel::Polynomial { degree, .. } => format!("svr-poly-d{degree}"),
                Kernel::Rbf { gamma } => format!("svr-rbf-g{gamma}"),
            },
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            LearnerSpec::Mean => "mean",
            LearnerSpec::Knn1 => "knn1",
            LearnerSpec::Linear => "linear",
            LearnerSpec::M5(_) => "m5",
            LearnerSpec::Svr(_) => "svr",
        }
    }

    /// The default line-up: 1-NN, OLS, M5, polynomial SVR and three RBF SVRs.
    pub fn presets() -> Vec<LearnerSpec> {
        let mut out = vec![
            LearnerSpec::Knn1,
            LearnerSpec::Linear,
            LearnerSpec::M5(M5Params::default()),
            LearnerSpec::Svr(SvrParams::polynomial()),
        ];
        out.extend(svr::RBF_GAMMAS.iter().map(|&g| LearnerSpec::Svr(SvrParams::rbf(g))));
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LearnerSpec::M5(p) => p.validate(),
            LearnerSpec::Svr(p) => p.validate(),
            _ => Ok(()),
        }
    }

    fn min_examples(&self) -> usize {
        match self {
            LearnerSpec::Mean | LearnerSpec::Knn1 => 1,
            _ => 2,
        }
    }
}

/// Per-feature min-max scaling onto [0, 1]; constant features map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(x: &DMatrix<f64>) -> Self {
        let (mins, maxs) = x
            .column_iter()
            .map(|c| (c.min(), c.max()))
            .unzip();
        MinMaxScaler { mins, maxs }
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mins.iter().zip(&self.maxs))
            .map(|(&v, (&lo, &hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
            .collect()
    }

    pub fn transform_matrix(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let rows: Vec<Vec<f64>> = x
            .row_iter()
            .map(|r| self.transform(&r.iter().copied().collect::<Vec<_>>()))
            .collect();
        DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| rows[i][j])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedModel {
    Mean { value: f64 },
    Knn1(NearestNeighbor),
    Linear(LinearModel),
    M5(M5Tree),
    Svr(SvrModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaRegressor {
    pub spec: LearnerSpec,
    pub extractor_hash: String,
    pub label_range: (usize, usize),
    pub scaler: MinMaxScaler,
    pub model: FittedModel,
    /// Degenerate-fit notes, e.g. constant labels.
    pub warnings: Vec<String>,
}

/// Fits a regressor of the given family on the whole meta-base.
pub fn fit(spec: &LearnerSpec, mb: &MetaBase) -> Result<MetaRegressor> {
    spec.validate()?;
    if mb.len() < spec.min_examples() {
        return Err(Error::invalid(format!(
            "{} needs at least {} meta-example(s), got {}",
            spec.id(),
            spec.min_examples(),
            mb.len()
        )));
    }
    let raw = mb.feature_matrix();
    let scaler = MinMaxScaler::fit(&raw);
    let x = scaler.transform_matrix(&raw);
    let y = DVector::from_vec(mb.labels());

    let mut warnings = Vec::new();
    let constant_labels = y.max() == y.min();
    if constant_labels && matches!(spec, LearnerSpec::Linear | LearnerSpec::Svr(_)) {
        warnings.push("constant labels: model degenerates to a constant".to_string());
    }

    let model = match spec {
        LearnerSpec::Mean => FittedModel::Mean { value: y.mean() },
        LearnerSpec::Knn1 => FittedModel::Knn1(NearestNeighbor::fit(&x, &y)),
        LearnerSpec::Linear => FittedModel::Linear(fit_ols(&x, &y)?),
        LearnerSpec::M5(p) => FittedModel::M5(M5Tree::fit(&x, &y, p)?),
        LearnerSpec::Svr(p) => FittedModel::Svr(SvrModel::fit(&x, &y, p)?),
    };
    Ok(MetaRegressor {
        spec: spec.clone(),
        extractor_hash: mb.header.extractor_hash.clone(),
        label_range: mb.header.label_range(),
        scaler,
        model,
        warnings,
    })
}

/// Rounds a raw prediction and clamps it into the label range.
pub fn recommend_from_raw(raw: f64, label_range: (usize, usize)) -> usize {
    let (lo, hi) = label_range;
    if raw.is_nan() {
        return lo;
    }
    raw.round().clamp(lo as f64, hi as f64) as usize
}

impl MetaRegressor {
    /// Raw real-valued prediction. `extractor_hash` identifies the extractor
    /// configuration that produced `f` and must match the training one.
    pub fn predict_raw(&self, f: &MetaFeatureVector, extractor_hash: &str) -> Result<f64> {
        if extractor_hash != self.extractor_hash {
            return Err(Error::ConfigHashMismatch {
                expected: self.extractor_hash.clone(),
                actual: extractor_hash.to_string(),
            });
        }
        let x = self.scaler.transform(f.as_slice());
        let y = match &self.model {
            FittedModel::Mean { value } => *value,
            FittedModel::Knn1(m) => m.predict(&x),
            FittedModel::Linear(m) => m.predict(&x),
            FittedModel::M5(m) => m.predict(&x),
            FittedModel::Svr(m) => m.predict(&x),
        };
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::Numerical(format!("{} produced a non-finite prediction", self.spec.id())))
        }
    }

    /// Integer recommendation: the raw prediction rounded and clamped into
    /// the label range of the training meta-base.
    pub fn recommend(&self, f: &MetaFeatureVector, extractor_hash: &str) -> Result<usize> {
        Ok(recommend_from_raw(self.predict_raw(f, extractor_hash)?, self.label_range))
    }
}

pub fn save_model(model: &MetaRegressor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, model)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<MetaRegressor> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(BufReader::new(f))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label_search::SweepConfig;
    use crate::metabase::{MetaBaseHeader, MetaExample};
    use crate::meta_features::{ExtractorConfig, N_META_FEATURES};

    fn mb(rows: &[([f64; 2], usize)]) -> MetaBase {
        let examples = rows
            .iter()
            .enumerate()
            .map(|(i, (f, label))| {
                let mut v = [0.0; N_META_FEATURES];
                v[0] = f[0];
                v[6] = f[1];
                MetaExample {
                    dataset: format!("d{i}"),
                    features: MetaFeatureVector(v),
                    label: *label,
                }
            })
            .collect();
        MetaBase::new(MetaBaseHeader::new(ExtractorConfig::default(), SweepConfig::default()), examples).unwrap()
    }

    #[test]
    fn recommend_rounds_and_clamps() {
        assert_eq!(recommend_from_raw(93.4, (1, 300)), 93);
        assert_eq!(recommend_from_raw(-12.0, (1, 300)), 1);
        assert_eq!(recommend_from_raw(450.0, (1, 300)), 300);
        assert_eq!(recommend_from_raw(f64::NAN, (1, 300)), 1);
    }

    #[test]
    fn single_example_knn_and_minimums() {
        let one = mb(&[([0.3, 100.0], 42)]);
        let r = fit(&LearnerSpec::Knn1, &one).unwrap();
        let hash = one.header.extractor_hash.clone();
        let mut q = [0.0; N_META_FEATURES];
        q[0] = 123.0;
        assert_eq!(r.predict_raw(&MetaFeatureVector(q), &hash).unwrap(), 42.0);
        assert!(fit(&LearnerSpec::Linear, &one).is_err());
        assert!(fit(&LearnerSpec::M5(M5Params::default()), &one).is_err());
    }

    #[test]
    fn hash_mismatch_is_rejected() {
        let m = mb(&[([0.0, 1.0], 3), ([1.0, 2.0], 5)]);
        let r = fit(&LearnerSpec::Linear, &m).unwrap();
        let err = r.predict_raw(&m.examples[0].features, "deadbeef").unwrap_err();
        assert!(matches!(err, Error::ConfigHashMismatch { .. }));
    }

    #[test]
    fn constant_labels_flagged_for_linear() {
        let m = mb(&[([0.0, 1.0], 7), ([1.0, 2.0], 7), ([0.5, 3.0], 7)]);
        let r = fit(&LearnerSpec::Linear, &m).unwrap();
        assert_eq!(r.warnings.len(), 1);
        let p = r.predict_raw(&m.examples[0].features, &m.header.extractor_hash).unwrap();
        assert!((p - 7.0).abs() < 1e-9);
        assert!(fit(&LearnerSpec::Knn1, &m).unwrap().warnings.is_empty());
    }

    #[test]
    fn spec_ids_are_distinct() {
        let ids: Vec<String> = LearnerSpec::presets().iter().map(LearnerSpec::id).collect();
        let mut dedup = ids.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(ids.len(), dedup.len());
        assert_eq!(ids[0], "knn1");
        assert!(ids.contains(&"svr-rbf-g0.1".to_string()));
    }

    #[test]
    fn spec_json_shape() {
        let s = serde_json::to_string(&LearnerSpec::Svr(SvrParams::rbf(0.1))).unwrap();
        assert!(s.contains("\"family\":\"svr\""), "{s}");
        let back: LearnerSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, LearnerSpec::Svr(SvrParams::rbf(0.1)));
        let knn: LearnerSpec = serde_json::from_str(r#"{"family":"knn1"}"#).unwrap();
        assert_eq!(knn, LearnerSpec::Knn1);
    }

    #[test]
    fn scaler_maps_training_range_to_unit_interval() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 5.0, 3.0, 5.0, 2.0, 5.0]);
        let s = MinMaxScaler::fit(&x);
        assert_eq!(s.transform(&[1.0, 5.0]), vec![0.0, 0.0]);
        assert_eq!(s.transform(&[3.0, 9.0]), vec![1.0, 0.0]);
        assert_eq!(s.transform(&[2.0, 5.0]), vec![0.5, 0.0]);
    }
}
