//! Dense ARFF subset: `@relation`, `@attribute` with numeric, real, integer
//! or nominal types, and `@data`. Rows containing `?` are dropped and counted.

use super::io::{is_missing, parse_finite, Loaded};
use super::{Column, ColumnData, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum AttrType {
    Numeric,
    Nominal(Vec<String>),
}

#[derive(Debug, Clone)]
struct Attribute {
    name: String,
    ty: AttrType,
}

fn unquote(s: &str) -> &str {
    let s = s.trim();
    let bytes = s.as_bytes();
    if bytes.len() >= 2
        && ((bytes[0] == b'\'' && bytes[bytes.len() - 1] == b'\'')
            || (bytes[0] == b'"' && bytes[bytes.len() - 1] == b'"'))
    {
        &s[1..s.len() - 1]
    } else {
        s
    }
}

/// Splits on commas outside single or double quotes.
fn split_values(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quote: Option<char> = None;
    for ch in line.chars() {
        match (quote, ch) {
            (None, '\'' | '"') => {
                quote = Some(ch);
                cur.push(ch);
            }
            (Some(q), c) if c == q => {
                quote = None;
                cur.push(ch);
            }
            (None, ',') => out.push(std::mem::take(&mut cur)),
            _ => cur.push(ch),
        }
    }
    out.push(cur);
    out.into_iter().map(|v| unquote(&v).to_string()).collect()
}

/// Splits `@attribute <name> <type>` into name and type text.
fn split_attribute(rest: &str) -> Option<(String, String)> {
    let rest = rest.trim_start();
    let first = rest.chars().next()?;
    if first == '\'' || first == '"' {
        let end = rest[1..].find(first)? + 1;
        Some((rest[1..end].to_string(), rest[end + 1..].trim().to_string()))
    } else {
        let end = rest.find(char::is_whitespace)?;
        Some((rest[..end].to_string(), rest[end..].trim().to_string()))
    }
}

fn keyword<'a>(line: &'a str, kw: &str) -> Option<&'a str> {
    if line.len() >= kw.len() && line[..kw.len()].eq_ignore_ascii_case(kw) {
        let rest = &line[kw.len()..];
        if rest.is_empty() || rest.starts_with(char::is_whitespace) {
            return Some(rest);
        }
    }
    None
}

pub(crate) fn parse(text: &str, name: &str, target: Option<&str>) -> Result<Loaded> {
    let err = |line: usize, message: String| Error::Parse {
        context: name.to_string(),
        line,
        message,
    };

    let mut attrs: Vec<Attribute> = Vec::new();
    let mut in_data = false;
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut skipped_rows = 0;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if in_data {
            if line.starts_with('{') {
                return Err(err(lineno, "sparse ARFF rows are not supported".into()));
            }
            let cells = split_values(line);
            if cells.len() != attrs.len() {
                return Err(err(
                    lineno,
                    format!("expected {} values, found {}", attrs.len(), cells.len()),
                ));
            }
            if cells.iter().any(|c| is_missing(c)) {
                skipped_rows += 1;
                continue;
            }
            rows.push(cells);
            continue;
        }
        if keyword(line, "@relation").is_some() {
            continue;
        }
        if let Some(rest) = keyword(line, "@attribute") {
            let (attr_name, ty_text) = split_attribute(rest)
                .ok_or_else(|| err(lineno, format!("malformed attribute line `{line}`")))?;
            let ty = if ty_text.starts_with('{') {
                let close = ty_text
                    .rfind('}')
                    .ok_or_else(|| err(lineno, "unterminated nominal specification".into()))?;
                let values: Vec<String> = split_values(&ty_text[1..close])
                    .into_iter()
                    .filter(|v| !v.is_empty())
                    .collect();
                if values.is_empty() {
                    return Err(err(lineno, format!("nominal attribute `{attr_name}` has no values")));
                }
                AttrType::Nominal(values)
            } else {
                match ty_text.to_ascii_lowercase().as_str() {
                    "numeric" | "real" | "integer" => AttrType::Numeric,
                    other => {
                        return Err(err(lineno, format!("unsupported attribute type `{other}`")))
                    }
                }
            };
            attrs.push(Attribute {
                name: attr_name,
                ty,
            });
            continue;
        }
        if keyword(line, "@data").is_some() {
            if attrs.is_empty() {
                return Err(err(lineno, "@data before any @attribute".into()));
            }
            in_data = true;
            continue;
        }
        return Err(err(lineno, format!("unsupported keyword or stray line `{line}`")));
    }

    if !in_data {
        return Err(err(0, "missing @data section".into()));
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset(name.to_string()));
    }

    let target_idx = match target {
        Some(t) => attrs
            .iter()
            .position(|a| a.name == t)
            .ok_or_else(|| Error::MissingTarget(t.to_string()))?,
        None => attrs.len() - 1,
    };
    if attrs[target_idx].ty != AttrType::Numeric {
        return Err(Error::NonNumericTarget {
            column: attrs[target_idx].name.clone(),
            value: rows[0][target_idx].clone(),
        });
    }

    let mut features = Vec::new();
    let mut target_values = Vec::new();
    for (j, attr) in attrs.iter().enumerate() {
        match &attr.ty {
            AttrType::Numeric => {
                let mut values = Vec::with_capacity(rows.len());
                for row in &rows {
                    let v = parse_finite(&row[j]).ok_or_else(|| {
                        err(0, format!("non-numeric value `{}` in `{}`", row[j], attr.name))
                    })?;
                    values.push(v);
                }
                if j == target_idx {
                    target_values = values;
                } else {
                    features.push(Column::continuous(attr.name.clone(), values));
                }
            }
            AttrType::Nominal(categories) => {
                let mut codes = Vec::with_capacity(rows.len());
                for row in &rows {
                    let code = categories.iter().position(|c| *c == row[j]).ok_or_else(|| {
                        err(0, format!("undeclared value `{}` for `{}`", row[j], attr.name))
                    })?;
                    codes.push(code);
                }
                features.push(Column {
                    name: attr.name.clone(),
                    data: ColumnData::Symbolic {
                        categories: categories.clone(),
                        codes,
                    },
                });
            }
        }
    }

    let dataset = Dataset::new(name, features, attrs[target_idx].name.clone(), target_values)?;
    Ok(Loaded {
        dataset,
        skipped_rows,
    })
}
