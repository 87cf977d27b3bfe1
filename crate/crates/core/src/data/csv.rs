use std::collections::HashMap;
use std::path::Path;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::tensor::Tensor2D;

/// Loads a comma-separated numeric table.
///
/// A first row with a non-numeric feature cell is treated as a header.
/// When `label_col` is given, that column is removed from the features and
/// its values are mapped to `0..k` in order of first appearance.
pub fn load_csv(path: &Path, label_col: Option<usize>) -> Result<Dataset> {
    let csv_err = |line: u64, message: String| Error::Csv {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(0, e.to_string()))?;

    let mut width: Option<usize> = None;
    let mut values = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    let mut rows = 0usize;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(i as u64 + 1, e.to_string()))?;
        let line = rec.position().map_or(i as u64 + 1, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let is_text = |(j, c): (usize, &str)| Some(j) != label_col && c.parse::<f64>().is_err();
        if i == 0 && rec.iter().enumerate().any(is_text) {
            continue;
        }
        match width {
            None => {
                if let Some(lc) = label_col {
                    if lc >= rec.len() {
                        return Err(csv_err(
                            line,
                            format!("label column {lc} out of range for {} fields", rec.len()),
                        ));
                    }
                }
                width = Some(rec.len());
            }
            Some(w) if w != rec.len() => {
                return Err(csv_err(
                    line,
                    format!("ragged row: expected {w} fields, found {}", rec.len()),
                ));
            }
            _ => {}
        }
        for (j, cell) in rec.iter().enumerate() {
            if Some(j) == label_col {
                raw_labels.push(cell.to_string());
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| csv_err(line, format!("column {j}: non-numeric value {cell:?}")))?;
            if !v.is_finite() {
                return Err(csv_err(line, format!("column {j}: non-finite value")));
            }
            values.push(v);
        }
        rows += 1;
    }
    let width = width.ok_or(Error::EmptyDataset("load_csv"))?;
    let d = width - usize::from(label_col.is_some());
    let labels = label_col.map(|_| reindex(&raw_labels));
    let name = path
        .file_stem()
        .map_or_else(|| "csv".to_string(), |s| s.to_string_lossy().into_owned());
    Dataset::new(Tensor2D::from_vec(rows, d, values)?, labels, name)
}

/// Number of fields in the first non-empty record.
pub fn field_count(path: &Path) -> Result<usize> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })?;
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            line: 1,
            message: e.to_string(),
        })?;
        if !rec.iter().all(|c| c.trim().is_empty()) {
            return Ok(rec.len());
        }
    }
    Err(Error::EmptyDataset("load_csv"))
}

fn reindex(raw: &[String]) -> Vec<usize> {
    let mut map: HashMap<&str, usize> = HashMap::new();
    raw.iter()
        .map(|s| {
            let next = map.len();
            *map.entry(s.as_str()).or_insert(next)
        })
        .collect()
}
