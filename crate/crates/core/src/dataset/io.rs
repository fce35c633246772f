use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{arff, Column, ColumnData, Dataset, Normalizer};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Arff,
}

impl Format {
    pub fn from_path(path: &Path) -> Option<Format> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "csv" => Some(Format::Csv),
            "arff" => Some(Format::Arff),
            _ => None,
        }
    }
}

/// A freshly loaded dataset plus the number of rows dropped for holding
/// missing values.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub dataset: Dataset,
    pub skipped_rows: usize,
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string())
}

pub(crate) fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "?"
}

pub(crate) fn parse_finite(cell: &str) -> Option<f64> {
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Loads a raw dataset. `target` names the target column; by default the
/// last column is used.
pub fn load_dataset(path: impl AsRef<Path>, format: Format, target: Option<&str>) -> Result<Loaded> {
    let path = path.as_ref();
    let name = dataset_name(path);
    let loaded = match format {
        Format::Csv => {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            read_csv(BufReader::new(file), &name, target)?
        }
        Format::Arff => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            arff::parse(&text, &name, target)?
        }
    };
    if loaded.skipped_rows > 0 {
        log::warn!(
            "{}: skipped {} row(s) with missing values",
            path.display(),
            loaded.skipped_rows
        );
    }
    Ok(loaded)
}

/// Parses CSV text with a header row. A column is symbolic iff any of its
/// non-missing cells fails to parse as a finite number.
pub fn read_csv<R: std::io::Read>(reader: R, name: &str, target: Option<&str>) -> Result<Loaded> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if headers.is_empty() {
        return Err(Error::Parse {
            context: name.to_string(),
            line: 1,
            message: "missing header row".into(),
        });
    }
    let target_idx = match target {
        Some(t) => headers
            .iter()
            .position(|h| h == t)
            .ok_or_else(|| Error::MissingTarget(t.to_string()))?,
        None => headers.len() - 1,
    };

    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut skipped_rows = 0;
    for record in rdr.records() {
        let record = record?;
        let cells: Vec<String> = record.iter().map(str::to_string).collect();
        if cells.iter().any(|c| is_missing(c)) {
            skipped_rows += 1;
            continue;
        }
        rows.push(cells);
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset(name.to_string()));
    }

    let mut target_values = Vec::with_capacity(rows.len());
    for row in &rows {
        let cell = &row[target_idx];
        target_values.push(parse_finite(cell).ok_or_else(|| Error::NonNumericTarget {
            column: headers[target_idx].clone(),
            value: cell.clone(),
        })?);
    }

    let mut features = Vec::new();
    for (j, header) in headers.iter().enumerate() {
        if j == target_idx {
            continue;
        }
        let numeric: Option<Vec<f64>> = rows.iter().map(|r| parse_finite(&r[j])).collect();
        features.push(match numeric {
            Some(values) => Column::continuous(header.clone(), values),
            None => {
                let cells: Vec<&str> = rows.iter().map(|r| r[j].as_str()).collect();
                Column::symbolic(header.clone(), &cells)
            }
        });
    }

    let dataset = Dataset::new(name, features, headers[target_idx].clone(), target_values)?;
    Ok(Loaded {
        dataset,
        skipped_rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ColumnSchema {
    Continuous { name: String },
    Symbolic { name: String, categories: Vec<String> },
    Indicator { name: String, source: String, category: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Schema {
    name: String,
    target: String,
    columns: Vec<ColumnSchema>,
    normalization: Option<Normalizer>,
}

/// Sidecar schema path for a canonical CSV file: `dir/name.csv` →
/// `dir/name.schema.json`.
pub fn schema_path(csv_path: &Path) -> PathBuf {
    let stem = csv_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    csv_path.with_file_name(format!("{stem}.schema.json"))
}

/// Writes the canonical form: a CSV body (features then target) and a JSON
/// schema sidecar with column kinds, category dictionaries and normalization
/// parameters.
pub fn save_canonical(d: &Dataset, csv_path: impl AsRef<Path>) -> Result<()> {
    let csv_path = csv_path.as_ref();
    let schema = Schema {
        name: d.name.clone(),
        target: d.target_name.clone(),
        columns: d
            .features
            .iter()
            .map(|c| match &c.data {
                ColumnData::Continuous(_) => ColumnSchema::Continuous {
                    name: c.name.clone(),
                },
                ColumnData::Symbolic { categories, .. } => ColumnSchema::Symbolic {
                    name: c.name.clone(),
                    categories: categories.clone(),
                },
                ColumnData::Indicator {
                    source, category, ..
                } => ColumnSchema::Indicator {
                    name: c.name.clone(),
                    source: source.clone(),
                    category: category.clone(),
                },
            })
            .collect(),
        normalization: d.normalization.clone(),
    };
    let schema_file = schema_path(csv_path);
    let f = File::create(&schema_file).map_err(|e| Error::io(&schema_file, e))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, &schema)?;
    w.write_all(b"\n").map_err(|e| Error::io(&schema_file, e))?;

    let mut wtr = csv::Writer::from_path(csv_path)?;
    let mut header: Vec<&str> = d.features.iter().map(|c| c.name.as_str()).collect();
    header.push(&d.target_name);
    wtr.write_record(&header)?;
    for i in 0..d.n_rows() {
        let mut row: Vec<String> = d.features.iter().map(|c| c.cell_text(i)).collect();
        row.push(super::format_f64(d.target[i]));
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(|e| Error::io(csv_path, e))?;
    Ok(())
}

/// Reads a dataset written by [`save_canonical`].
pub fn load_canonical(csv_path: impl AsRef<Path>) -> Result<Dataset> {
    let csv_path = csv_path.as_ref();
    let schema_file = schema_path(csv_path);
    let f = File::open(&schema_file).map_err(|e| Error::io(&schema_file, e))?;
    let schema: Schema = serde_json::from_reader(BufReader::new(f))?;

    let mut rdr = csv::Reader::from_path(csv_path)?;
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut expected: Vec<&str> = schema
        .columns
        .iter()
        .map(|c| match c {
            ColumnSchema::Continuous { name }
            | ColumnSchema::Symbolic { name, .. }
            | ColumnSchema::Indicator { name, .. } => name.as_str(),
        })
        .collect();
    expected.push(&schema.target);
    if headers != expected {
        return Err(Error::Schema(format!(
            "{}: header {:?} does not match schema {:?}",
            csv_path.display(),
            headers,
            expected
        )));
    }

    let n_cols = schema.columns.len();
    let mut numeric: Vec<Vec<f64>> = vec![Vec::new(); n_cols];
    let mut codes: Vec<Vec<usize>> = vec![Vec::new(); n_cols];
    let mut target = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let line = line + 2;
        let bad = |msg: String| Error::Parse {
            context: csv_path.display().to_string(),
            line,
            message: msg,
        };
        for (j, col) in schema.columns.iter().enumerate() {
            let cell = &record[j];
            match col {
                ColumnSchema::Symbolic { categories, name } => {
                    let code = categories
                        .iter()
                        .position(|c| c == cell)
                        .ok_or_else(|| bad(format!("unknown category `{cell}` in `{name}`")))?;
                    codes[j].push(code);
                }
                _ => numeric[j].push(
                    parse_finite(cell).ok_or_else(|| bad(format!("bad number `{cell}`")))?,
                ),
            }
        }
        let t = &record[n_cols];
        target.push(parse_finite(t).ok_or_else(|| bad(format!("bad target `{t}`")))?);
    }

    let features = schema
        .columns
        .into_iter()
        .zip(numeric.into_iter().zip(codes))
        .map(|(col, (nums, cs))| match col {
            ColumnSchema::Continuous { name } => Column::continuous(name, nums),
            ColumnSchema::Symbolic { name, categories } => Column {
                name,
                data: ColumnData::Symbolic {
                    categories,
                    codes: cs,
                },
            },
            ColumnSchema::Indicator {
                name,
                source,
                category,
            } => Column {
                name,
                data: ColumnData::Indicator {
                    source,
                    category,
                    values: nums,
                },
            },
        })
        .collect();
    let d = Dataset {
        name: schema.name,
        features,
        target_name: schema.target,
        target,
        normalization: schema.normalization,
    };
    d.validate()?;
    Ok(d)
}
