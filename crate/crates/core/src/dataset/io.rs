//! Dataset persistence: a CSV matrix with a JSON schema sidecar.
//!
//! Column order is `id`, user-meta names, `embedding_0..`, tweet-meta names,
//! temporal names, and a trailing `label` column when labels are present.
//! Floats are written in shortest round-trip form, so save/load is
//! value-exact.

use std::fs;
use std::path::{Path, PathBuf};

use super::{Dataset, FeatureSchema};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Sidecar path for a dataset file: `train.csv` -> `train.schema.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    let stem = csv_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    csv_path.with_file_name(format!("{stem}.schema.json"))
}

pub fn save_dataset<S: Scalar>(ds: &Dataset<S>, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(
        sidecar_path(path),
        serde_json::to_string_pretty(ds.schema())?,
    )?;

    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec!["id".to_string()];
    header.extend(ds.schema().column_headers());
    let has_labels = ds.labels().is_some();
    if has_labels {
        header.push("label".to_string());
    }
    writer.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for r in 0..ds.n_rows() {
        record.clear();
        record.push(ds.ids()[r].clone());
        record.extend(ds.row(r).iter().map(|v| v.to_string()));
        if let Some(labels) = ds.labels() {
            record.push(labels[r].to_string());
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn load_dataset<S: Scalar>(path: &Path) -> Result<Dataset<S>> {
    let sidecar = sidecar_path(path);
    let schema_text = fs::read_to_string(&sidecar).map_err(|e| {
        Error::data(format!(
            "cannot read schema sidecar {}: {e}",
            sidecar.display()
        ))
    })?;
    let schema: FeatureSchema = serde_json::from_str(&schema_text)?;
    let width = schema.total_width();
    let path_str = path.display().to_string();
    let parse_err = |row: usize, col: usize, message: String| Error::Parse {
        path: path_str.clone(),
        row,
        col,
        message,
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)?;
    let mut records = reader.records();

    let header = match records.next() {
        Some(rec) => rec.map_err(|e| parse_err(1, 0, e.to_string()))?,
        None => return Err(parse_err(1, 0, "file is empty".into())),
    };
    let expected_header: Vec<String> = {
        let mut h = vec!["id".to_string()];
        h.extend(schema.column_headers());
        h
    };
    if header.len() < expected_header.len() {
        return Err(parse_err(
            1,
            header.len(),
            format!(
                "header has {} columns, schema requires at least {}",
                header.len(),
                expected_header.len()
            ),
        ));
    }
    for (c, want) in expected_header.iter().enumerate() {
        if header.get(c) != Some(want.as_str()) {
            return Err(parse_err(
                1,
                c + 1,
                format!(
                    "header column {} is '{}', expected '{}'",
                    c + 1,
                    header.get(c).unwrap_or(""),
                    want
                ),
            ));
        }
    }
    let has_labels = match header.len() - expected_header.len() {
        0 => false,
        1 if header.get(header.len() - 1) == Some("label") => true,
        _ => {
            return Err(parse_err(
                1,
                header.len(),
                "trailing columns after features must be exactly 'label'".into(),
            ))
        }
    };

    let expected_cols = expected_header.len() + usize::from(has_labels);
    let mut data: Vec<S> = Vec::new();
    let mut ids = Vec::new();
    let mut labels: Vec<u8> = Vec::new();
    for (i, rec) in records.enumerate() {
        let row_no = i + 2; // 1-based, counting the header row
        let rec = rec.map_err(|e| parse_err(row_no, 0, e.to_string()))?;
        if rec.len() != expected_cols {
            return Err(parse_err(
                row_no,
                rec.len(),
                format!("row has {} columns, expected {expected_cols}", rec.len()),
            ));
        }
        let id = rec.get(0).unwrap_or("").to_string();
        for c in 0..width {
            let raw = rec.get(c + 1).unwrap_or("");
            let v: S = raw.parse().map_err(|e| {
                parse_err(row_no, c + 2, format!("bad float '{raw}': {e}"))
            })?;
            if !v.is_finite() {
                return Err(parse_err(
                    row_no,
                    c + 2,
                    format!("non-finite value '{raw}'"),
                ));
            }
            data.push(v);
        }
        if has_labels {
            let raw = rec.get(expected_cols - 1).unwrap_or("");
            match raw {
                "0" => labels.push(0),
                "1" => labels.push(1),
                other => {
                    return Err(parse_err(
                        row_no,
                        expected_cols,
                        format!("label for id '{id}' is '{other}', expected 0 or 1"),
                    ))
                }
            }
        }
        ids.push(id);
    }
    let n = ids.len();
    let rows = Matrix::from_vec(n, width, data)?;
    Dataset::new(schema, rows, has_labels.then_some(labels), ids)
}
