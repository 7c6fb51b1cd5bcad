//! Delimited tables, the truth sidecar and atomic file output.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use unmix::{AxisKind, ExpressionMatrix};

use crate::error::CliError;

/// Rows of a delimited text file, with their 1-based line numbers.
pub struct Records {
    pub path: PathBuf,
    pub header: Vec<String>,
    pub rows: Vec<(u64, Vec<String>)>,
}

/// Tab if the first line has one, comma otherwise.
fn sniff_delimiter(text: &str) -> u8 {
    match text.lines().find(|l| !l.trim().is_empty()) {
        Some(line) if line.contains('\t') => b'\t',
        _ => b',',
    }
}

pub fn read_records(path: &Path) -> Result<Records, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if text.trim().is_empty() {
        return Err(CliError::parse(path, 1, "file is empty"));
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(sniff_delimiter(&text))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::parse(path, 1, e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::parse(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != header.len() {
            return Err(CliError::parse(
                path,
                line,
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        rows.push((line, record.iter().map(str::to_owned).collect()));
    }
    Ok(Records {
        path: path.to_path_buf(),
        header,
        rows,
    })
}

impl Records {
    pub fn expect_columns(&self, n: usize) -> Result<(), CliError> {
        if self.header.len() != n {
            return Err(CliError::parse(
                &self.path,
                1,
                format!("expected {n} columns, found {}", self.header.len()),
            ));
        }
        Ok(())
    }

    pub fn number(&self, line: u64, field: &str, column: usize) -> Result<f64, CliError> {
        field.parse::<f64>().map_err(|_| {
            CliError::parse(
                &self.path,
                line,
                format!(
                    "invalid number '{field}' in column '{}'",
                    self.header[column]
                ),
            )
        })
    }

    /// `(ids, values)` for a `id, v1, v2` table, without domain validation.
    pub fn pairs(&self) -> Result<(Vec<String>, Vec<[f64; 2]>), CliError> {
        self.expect_columns(3)?;
        let mut ids = Vec::with_capacity(self.rows.len());
        let mut values = Vec::with_capacity(self.rows.len());
        for (line, row) in &self.rows {
            ids.push(row[0].clone());
            values.push([
                self.number(*line, &row[1], 1)?,
                self.number(*line, &row[2], 2)?,
            ]);
        }
        Ok((ids, values))
    }
}

/// Two-sample input table; header `gene_id, sample1, sample2`.
pub struct Expression {
    pub sample_names: [String; 2],
    pub matrix: ExpressionMatrix,
}

pub fn read_expression(path: &Path, axis: AxisKind) -> Result<Expression, CliError> {
    let records = read_records(path)?;
    let (ids, values) = records.pairs()?;
    let matrix = ExpressionMatrix::new(ids, values, axis).map_err(|source| CliError::Input {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(Expression {
        sample_names: [records.header[1].clone(), records.header[2].clone()],
        matrix,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthMarkers {
    pub source1: Vec<String>,
    pub source2: Vec<String>,
}

/// Ground truth of a simulated dataset, keyed by gene id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub mixing: [[f64; 2]; 2],
    pub sources: BTreeMap<String, [f64; 2]>,
    pub markers: TruthMarkers,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub de_labels: Option<BTreeMap<String, bool>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<Value>,
}

pub fn read_truth(path: &Path) -> Result<Truth, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::parse(path, e.line() as u64, e.to_string()))
}

/// Writes to a sibling temporary file, then renames over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let io_err = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err)?;
    }
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, contents).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)
}

pub fn tsv<I, R>(header: &[&str], rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::WriterBuilder::new()
        .delimiter(b'\t')
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn json_bytes(value: &impl Serialize) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable report");
    out.push(b'\n');
    out
}

/// Flattens a JSON object into `key<TAB>value` lines with dotted keys.
pub fn flat_tsv(value: &Value) -> Vec<u8> {
    fn walk(prefix: &str, v: &Value, rows: &mut Vec<[String; 2]>) {
        let key = |k: &str| {
            if prefix.is_empty() {
                k.to_owned()
            } else {
                format!("{prefix}.{k}")
            }
        };
        match v {
            Value::Object(map) => map.iter().for_each(|(k, v)| walk(&key(k), v, rows)),
            Value::Array(items) => items
                .iter()
                .enumerate()
                .for_each(|(i, v)| walk(&key(&i.to_string()), v, rows)),
            Value::String(s) => rows.push([prefix.to_owned(), s.clone()]),
            Value::Null => rows.push([prefix.to_owned(), String::new()]),
            other => rows.push([prefix.to_owned(), other.to_string()]),
        }
    }
    let mut rows = Vec::new();
    walk("", value, &mut rows);
    tsv(&["key", "value"], rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delimiter_detection() {
        assert_eq!(sniff_delimiter("gene_id\ta\tb\n"), b'\t');
        assert_eq!(sniff_delimiter("\ngene_id,a,b\n"), b',');
    }

    #[test]
    fn flattening_uses_dotted_keys() {
        let v = serde_json::json!({"a": {"b": [1, 2]}, "c": "x", "d": null});
        let text = String::from_utf8(flat_tsv(&v)).unwrap();
        assert_eq!(text, "key\tvalue\na.b.0\t1\na.b.1\t2\nc\tx\nd\t\n");
    }
}
