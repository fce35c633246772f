//! Reading and writing the files exchanged between stages.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use elm_metalearn::dataset::{check_admission, format_f64, load_dataset, AdmissionReport, Dataset, Format};
use elm_metalearn::label_search::{HistogramBin, SweepConfig, SweepResult};
use elm_metalearn::meta_features::{ExtractorConfig, MetaFeatureVector, MetaWarning, FEATURE_NAMES, N_META_FEATURES};
use elm_metalearn::metabase::{header_path, LabelRecord};
use serde::{Deserialize, Serialize};

use crate::failure::{CmdResult, Failure};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance sidecar written next to every CSV artifact as
/// `<stem>.meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArtifactMeta {
    pub artifact: String,
    pub tool_version: String,
    pub config_hash: String,
    pub extractor_hash: String,
    pub extractor: ExtractorConfig,
    pub sweep: SweepConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_width: Option<usize>,
}

impl ArtifactMeta {
    pub fn new(artifact: &str, config_hash: String, extractor: ExtractorConfig, sweep: SweepConfig) -> Self {
        ArtifactMeta {
            artifact: artifact.into(),
            tool_version: TOOL_VERSION.into(),
            config_hash,
            extractor_hash: extractor.config_hash(),
            extractor,
            sweep,
            bin_width: None,
        }
    }
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> CmdResult<()> {
    let mut w = BufWriter::new(create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn write_meta(meta: &ArtifactMeta, csv_path: &Path) -> CmdResult<()> {
    write_json(meta, &header_path(csv_path))
}

/// Reads the sidecar of `csv_path`, checking its artifact kind and that the
/// recorded extractor hash matches the recorded extractor settings.
pub fn read_meta(csv_path: &Path, artifact: &str) -> CmdResult<ArtifactMeta> {
    let path = header_path(csv_path);
    let text = fs::read_to_string(&path)
        .map_err(|e| Failure::validation(format!("cannot read provenance {}: {e}", path.display())))?;
    let meta: ArtifactMeta = serde_json::from_str(&text)
        .map_err(|e| Failure::validation(format!("invalid provenance {}: {e}", path.display())))?;
    if meta.artifact != artifact {
        return Err(Failure::validation(format!(
            "{} describes a `{}` artifact, expected `{artifact}`",
            path.display(),
            meta.artifact
        )));
    }
    if meta.extractor_hash != meta.extractor.config_hash() {
        return Err(Failure::validation(format!(
            "{}: extractor hash does not match its settings",
            path.display()
        )));
    }
    Ok(meta)
}

pub fn create(path: &Path) -> CmdResult<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    File::create(path).map_err(|e| Failure::runtime(format!("cannot create {}: {e}", path.display())))
}

pub fn require_file(path: &Path) -> CmdResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::validation(format!("no such file: {}", path.display())))
    }
}

pub fn require_dir(path: &Path) -> CmdResult<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(Failure::validation(format!("no such directory: {}", path.display())))
    }
}

/// Dataset files (`.csv`, `.arff`) directly inside `dir`, sorted by name.
pub fn corpus_files(dir: &Path) -> CmdResult<Vec<PathBuf>> {
    require_dir(dir)?;
    let mut files = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_file() && Format::from_path(&path).is_some() {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Failure::validation(format!("no .csv or .arff files in {}", dir.display())));
    }
    Ok(files)
}

pub fn load_file(path: &Path, target: Option<&str>) -> CmdResult<Dataset> {
    let format = Format::from_path(path)
        .ok_or_else(|| Failure::validation(format!("{}: expected a .csv or .arff file", path.display())))?;
    let loaded = load_dataset(path, format, target).map_err(|e| Failure::from(e).context(path.display()))?;
    Ok(loaded.dataset)
}

pub struct Corpus {
    pub admitted: Vec<Dataset>,
    pub reports: Vec<(String, AdmissionReport)>,
}

/// Loads every dataset of a corpus directory and keeps the admissible ones.
pub fn load_corpus(dir: &Path, target: Option<&str>) -> CmdResult<Corpus> {
    let mut corpus = Corpus {
        admitted: Vec::new(),
        reports: Vec::new(),
    };
    for path in corpus_files(dir)? {
        let d = load_file(&path, target)?;
        if corpus.reports.iter().any(|(n, _)| *n == d.name) {
            return Err(Failure::validation(format!("two corpus files are named `{}`", d.name)));
        }
        let report = check_admission(&d);
        if report.admitted {
            corpus.admitted.push(d.clone());
        } else {
            log::warn!("{}: not admitted ({})", d.name, report.reasons.join("; "));
        }
        corpus.reports.push((d.name, report));
    }
    if corpus.admitted.is_empty() {
        return Err(Failure::validation(format!("no admissible dataset in {}", dir.display())));
    }
    log::info!("corpus: {} of {} dataset(s) admitted", corpus.admitted.len(), corpus.reports.len());
    Ok(corpus)
}

pub fn write_admission_csv(reports: &[(String, AdmissionReport)], path: &Path) -> CmdResult<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["dataset", "rows", "distinct_targets", "admitted", "reasons"])?;
    for (name, r) in reports {
        w.write_record([
            name.clone(),
            r.row_count.to_string(),
            r.distinct_target_values.to_string(),
            r.admitted.to_string(),
            r.reasons.join("; "),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub struct FeatureRow {
    pub dataset: String,
    pub features: MetaFeatureVector,
    pub warnings: Vec<MetaWarning>,
}

fn features_header() -> Vec<&'static str> {
    let mut h = vec!["dataset"];
    h.extend(FEATURE_NAMES);
    h.push("warnings");
    h
}

pub fn write_features_csv(rows: &[FeatureRow], path: &Path) -> CmdResult<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(features_header())?;
    for r in rows {
        let mut rec = vec![r.dataset.clone()];
        rec.extend(r.features.0.iter().map(|&v| format_f64(v)));
        rec.push(r.warnings.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(";"));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn check_header(found: &csv::StringRecord, expected: &[&str], path: &Path) -> CmdResult<()> {
    if found.iter().ne(expected.iter().copied()) {
        return Err(Failure::validation(format!(
            "{}: unexpected header, want `{}`",
            path.display(),
            expected.join(",")
        )));
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, path: &Path) -> CmdResult<T> {
    let line = rec.position().map_or(0, |p| p.line());
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Failure::runtime(format!("{} line {line}: bad value in column {}", path.display(), i + 1)))
}

/// Dataset names and feature vectors of a features CSV; warnings are not
/// read back.
pub fn read_features_csv(path: &Path) -> CmdResult<Vec<(String, MetaFeatureVector)>> {
    let mut r = csv::Reader::from_path(path)?;
    check_header(r.headers()?, &features_header(), path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let mut v = [0.0; N_META_FEATURES];
        for (j, slot) in v.iter_mut().enumerate() {
            *slot = parse_field(&rec, j + 1, path)?;
        }
        out.push((rec[0].to_string(), MetaFeatureVector(v)));
    }
    Ok(out)
}

const SUMMARY_HEADER: [&str; 3] = ["dataset", "best_count", "min_mean_rmse"];

pub fn write_summary_csv(results: &[SweepResult], path: &Path) -> CmdResult<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(SUMMARY_HEADER)?;
    for r in results {
        w.write_record([r.dataset.clone(), r.best_count.to_string(), format_f64(r.min_mean_rmse)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary_csv(path: &Path) -> CmdResult<Vec<LabelRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    check_header(r.headers()?, &SUMMARY_HEADER, path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        out.push(LabelRecord {
            dataset: rec[0].to_string(),
            best_count: parse_field(&rec, 1, path)?,
        });
    }
    Ok(out)
}

pub fn write_histogram_csv(bins: &[HistogramBin], path: &Path) -> CmdResult<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["bin_start", "bin_end", "count"])?;
    for b in bins {
        w.write_record([b.start.to_string(), b.end.to_string(), b.count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Plain CSV with the target as last column, readable by the loader.
pub fn write_dataset_csv(d: &Dataset, path: &Path) -> CmdResult<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header: Vec<&str> = d.features.iter().map(|c| c.name.as_str()).collect();
    header.push(&d.target_name);
    w.write_record(&header)?;
    for i in 0..d.n_rows() {
        let mut rec: Vec<String> = d.features.iter().map(|c| c.cell_text(i)).collect();
        rec.push(format_f64(d.target[i]));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Append-only log of stage timings. Timestamps live only here so the other
/// artifacts stay byte-identical across reruns.
pub struct RunLog {
    file: File,
}

impl RunLog {
    pub fn open(path: &Path) -> CmdResult<Self> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(RunLog { file })
    }

    pub fn line(&mut self, msg: &str) {
        let t = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default();
        if let Err(e) = writeln!(self.file, "{}.{:03} {msg}", t.as_secs(), t.subsec_millis()) {
            log::warn!("cannot write run log: {e}");
        }
    }
}
