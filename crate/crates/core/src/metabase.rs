//! The meta-base: one meta-example (meta-features + best hidden count) per
//! dataset, persisted as a CSV body with a JSON provenance sidecar.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::format_f64;
use crate::error::{Error, Result};
use crate::label_search::{SweepConfig, SweepResult};
use crate::meta_features::{ExtractorConfig, MetaFeatureVector, FEATURE_NAMES, N_META_FEATURES};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaExample {
    pub dataset: String,
    pub features: MetaFeatureVector,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaBaseHeader {
    pub schema_version: u32,
    pub tool_version: String,
    pub sweep: SweepConfig,
    pub extractor: ExtractorConfig,
    pub extractor_hash: String,
}

impl MetaBaseHeader {
    pub fn new(extractor: ExtractorConfig, sweep: SweepConfig) -> Self {
        MetaBaseHeader {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            extractor_hash: extractor.config_hash(),
            extractor,
            sweep,
        }
    }

    pub fn label_range(&self) -> (usize, usize) {
        (self.sweep.n_min, self.sweep.n_max)
    }

    /// Hash of the whole header, used to tie downstream artifacts to it.
    pub fn provenance_hash(&self) -> String {
        crate::seed::hex_digest(&serde_json::to_vec(self).expect("header serializes"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaBase {
    pub header: MetaBaseHeader,
    pub examples: Vec<MetaExample>,
}

impl MetaBase {
    pub fn new(header: MetaBaseHeader, examples: Vec<MetaExample>) -> Result<Self> {
        let mb = MetaBase { header, examples };
        mb.validate()?;
        Ok(mb)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        let (lo, hi) = self.header.label_range();
        for e in &self.examples {
            if !seen.insert(e.dataset.as_str()) {
                return Err(Error::DuplicateName(e.dataset.clone()));
            }
            if e.label < lo || e.label > hi {
                return Err(Error::Schema(format!(
                    "label {} of `{}` outside [{lo}, {hi}]",
                    e.label, e.dataset
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.examples.iter().map(|e| e.label as f64).collect()
    }

    /// Examples × 16 feature matrix.
    pub fn feature_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.len(), N_META_FEATURES, |i, j| self.examples[i].features.0[j])
    }

    /// Copy without the example at `index`.
    pub fn without(&self, index: usize) -> MetaBase {
        let mut examples = self.examples.clone();
        examples.remove(index);
        MetaBase {
            header: self.header.clone(),
            examples,
        }
    }
}

/// Dataset names that appeared in only one side of a join.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct JoinReport {
    pub features_only: Vec<String>,
    pub labels_only: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub dataset: String,
    pub best_count: usize,
}

impl From<&SweepResult> for LabelRecord {
    fn from(r: &SweepResult) -> Self {
        LabelRecord {
            dataset: r.dataset.clone(),
            best_count: r.best_count,
        }
    }
}

fn unique_map<'a, T>(items: impl Iterator<Item = (&'a str, T)>) -> Result<BTreeMap<&'a str, T>> {
    let mut map = BTreeMap::new();
    for (name, v) in items {
        if map.insert(name, v).is_some() {
            return Err(Error::DuplicateName(name.to_string()));
        }
    }
    Ok(map)
}

/// Inner join of meta-features and labels on dataset name. Examples come out
/// sorted by name, so the result does not depend on input order.
pub fn build_metabase(
    header: MetaBaseHeader,
    features: &[(String, MetaFeatureVector)],
    labels: &[LabelRecord],
) -> Result<(MetaBase, JoinReport)> {
    let fmap = unique_map(features.iter().map(|(n, f)| (n.as_str(), f)))?;
    let lmap = unique_map(labels.iter().map(|l| (l.dataset.as_str(), l.best_count)))?;

    let mut report = JoinReport::default();
    let mut examples = Vec::new();
    for (name, f) in &fmap {
        match lmap.get(name) {
            Some(&label) => examples.push(MetaExample {
                dataset: name.to_string(),
                features: **f,
                label,
            }),
            None => report.features_only.push(name.to_string()),
        }
    }
    report.labels_only = lmap
        .keys()
        .filter(|n| !fmap.contains_key(*n))
        .map(|n| n.to_string())
        .collect();
    if examples.is_empty() {
        return Err(Error::invalid("feature and label inputs share no dataset names"));
    }
    Ok((MetaBase::new(header, examples)?, report))
}

/// `dir/metabase.csv` → `dir/metabase.meta.json`.
pub fn header_path(csv_path: &Path) -> PathBuf {
    let stem = csv_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    csv_path.with_file_name(format!("{stem}.meta.json"))
}

pub fn save_metabase(mb: &MetaBase, csv_path: impl AsRef<Path>) -> Result<()> {
    let csv_path = csv_path.as_ref();
    let hp = header_path(csv_path);
    let f = File::create(&hp).map_err(|e| Error::io(&hp, e))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, &mb.header)?;
    w.write_all(b"\n").map_err(|e| Error::io(&hp, e))?;
    w.flush().map_err(|e| Error::io(&hp, e))?;

    let mut wtr = csv::Writer::from_path(csv_path)?;
    let mut header = vec!["dataset"];
    header.extend(FEATURE_NAMES);
    header.push("label");
    wtr.write_record(&header)?;
    for e in &mb.examples {
        let mut row = vec![e.dataset.clone()];
        row.extend(e.features.0.iter().map(|&v| format_f64(v)));
        row.push(e.label.to_string());
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(|e| Error::io(csv_path, e))?;
    Ok(())
}

pub fn load_metabase(csv_path: impl AsRef<Path>) -> Result<MetaBase> {
    let csv_path = csv_path.as_ref();
    let hp = header_path(csv_path);
    let f = File::open(&hp).map_err(|e| Error::io(&hp, e))?;
    let header: MetaBaseHeader = serde_json::from_reader(BufReader::new(f))?;
    if header.schema_version != SCHEMA_VERSION {
        return Err(Error::Schema(format!(
            "meta-base schema version {} (expected {SCHEMA_VERSION})",
            header.schema_version
        )));
    }
    if header.extractor_hash != header.extractor.config_hash() {
        return Err(Error::ConfigHashMismatch {
            expected: header.extractor.config_hash(),
            actual: header.extractor_hash.clone(),
        });
    }

    let file = File::open(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let context = csv_path.display().to_string();
    let width = N_META_FEATURES + 2;
    let head = rdr.headers()?;
    if head.len() != width {
        return Err(Error::Parse {
            context,
            line: 1,
            message: format!("header has {} columns, expected {width}", head.len()),
        });
    }
    let mut examples = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let bad = |message: String| Error::Parse {
            context: context.clone(),
            line,
            message,
        };
        if record.len() != width {
            return Err(bad(format!(
                "row for `{}` has {} columns, expected {width} ({} features)",
                &record[0],
                record.len(),
                record.len().saturating_sub(2)
            )));
        }
        let features = (1..=N_META_FEATURES)
            .map(|j| {
                record[j]
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| bad(format!("bad feature value `{}`", &record[j])))
            })
            .collect::<Result<Vec<f64>>>()?;
        let label = record[width - 1]
            .parse::<usize>()
            .map_err(|_| bad(format!("bad label `{}`", &record[width - 1])))?;
        examples.push(MetaExample {
            dataset: record[0].to_string(),
            features: MetaFeatureVector::from_slice(&features)?,
            label,
        });
    }
    MetaBase::new(header, examples)
}

/// Mean label: the constant a naive predictor would output.
pub fn label_mean(mb: &MetaBase) -> Result<f64> {
    if mb.is_empty() {
        return Err(Error::invalid("label mean of an empty meta-base"));
    }
    Ok(crate::stats::mean(&mb.labels()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(n_examples: f64, n_attrs: f64, n_outliers: f64) -> MetaFeatureVector {
        let mut v = [0.0; N_META_FEATURES];
        v[5] = n_attrs;
        v[6] = n_examples;
        v[7] = n_outliers;
        MetaFeatureVector(v)
    }

    fn header() -> MetaBaseHeader {
        MetaBaseHeader::new(ExtractorConfig::default(), SweepConfig::default())
    }

    fn label(name: &str, best: usize) -> LabelRecord {
        LabelRecord {
            dataset: name.into(),
            best_count: best,
        }
    }

    #[test]
    fn table_rows_join() {
        let feats = vec![
            ("a".to_string(), fv(100.0, 3.0, 0.0)),
            ("b".to_string(), fv(209.0, 6.0, 5.0)),
            ("c".to_string(), fv(950.0, 9.0, 0.0)),
        ];
        let labels = vec![label("c", 215), label("a", 4), label("b", 32)];
        let (mb, report) = build_metabase(header(), &feats, &labels).unwrap();
        assert_eq!(report, JoinReport::default());
        assert_eq!(mb.len(), 3);
        let a = &mb.examples[0];
        assert_eq!((a.features.0[6], a.features.0[5], a.features.0[7], a.label), (100.0, 3.0, 0.0, 4));
        let b = &mb.examples[1];
        assert_eq!((b.features.0[6], b.features.0[5], b.features.0[7], b.label), (209.0, 6.0, 5.0, 32));
    }

    #[test]
    fn partial_join_reports_skips() {
        let feats = vec![("a".to_string(), fv(1.0, 1.0, 0.0)), ("b".to_string(), fv(2.0, 1.0, 0.0))];
        let labels = vec![label("b", 7), label("c", 9)];
        let (mb, report) = build_metabase(header(), &feats, &labels).unwrap();
        assert_eq!(mb.len(), 1);
        assert_eq!(mb.examples[0].dataset, "b");
        assert_eq!(report.features_only, vec!["a"]);
        assert_eq!(report.labels_only, vec!["c"]);
    }

    #[test]
    fn join_errors() {
        let feats = vec![("a".to_string(), fv(1.0, 1.0, 0.0)), ("a".to_string(), fv(2.0, 1.0, 0.0))];
        assert!(matches!(
            build_metabase(header(), &feats, &[label("a", 3)]),
            Err(Error::DuplicateName(_))
        ));
        let feats = vec![("a".to_string(), fv(1.0, 1.0, 0.0))];
        assert!(build_metabase(header(), &feats, &[label("z", 3)]).is_err());
        assert!(build_metabase(header(), &feats, &[label("a", 301)]).is_err());
    }

    #[test]
    fn label_mean_examples() {
        let feats: Vec<_> = ["a", "b", "c", "d"].iter().map(|n| (n.to_string(), fv(1.0, 1.0, 0.0))).collect();
        let labels = vec![label("a", 4), label("b", 32), label("c", 215), label("d", 142)];
        let (mb, _) = build_metabase(header(), &feats, &labels).unwrap();
        assert_eq!(label_mean(&mb).unwrap(), 98.25);
        let one = MetaBase::new(header(), vec![mb.examples[2].clone()]).unwrap();
        assert_eq!(label_mean(&one).unwrap(), 215.0);
        let empty = MetaBase::new(header(), vec![]).unwrap();
        assert!(label_mean(&empty).is_err());
    }

    #[test]
    fn save_load_and_schema_errors() {
        let dir = tempfile::tempdir().unwrap();
        let feats = vec![("a".to_string(), fv(100.0, 3.0, 0.0))];
        let (mb, _) = build_metabase(header(), &feats, &[label("a", 4)]).unwrap();
        let path = dir.path().join("mb.csv");
        save_metabase(&mb, &path).unwrap();
        assert_eq!(load_metabase(&path).unwrap(), mb);

        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        assert!(lines[1].ends_with(",4"));
        // drop one feature column from the data row
        let mut cells: Vec<&str> = lines[1].split(',').collect();
        cells.remove(3);
        lines[1] = cells.join(",");
        std::fs::write(&path, lines.join("\n")).unwrap();
        let err = load_metabase(&path).unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("15 features"), "{err}");

        let mut h = mb.header.clone();
        h.schema_version = 99;
        std::fs::write(header_path(&path), serde_json::to_string(&h).unwrap()).unwrap();
        assert!(matches!(load_metabase(&path), Err(Error::Schema(_))));
    }
}
