use std::path::Path;

use cerf::apps::Dataset;
use ndarray::Array2;

use crate::error::{CliError, Result};

/// Loads a headerless comma-separated table. With `has_label`, the last
/// column is parsed as an integer class label.
pub fn load_dense_csv(path: &Path, has_label: bool) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    parse_dense_csv(&text, has_label).map_err(|m| CliError::Data(format!("{}: {m}", path.display())))
}

fn parse_dense_csv(text: &str, has_label: bool) -> std::result::Result<Dataset, String> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    let mut width: Option<usize> = None;
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        match width {
            None => width = Some(cells.len()),
            Some(w) if w != cells.len() => {
                return Err(format!(
                    "line {lineno}: expected {w} columns, found {}",
                    cells.len()
                ));
            }
            _ => {}
        }
        let value_cells = if has_label {
            if cells.len() < 2 {
                return Err(format!("line {lineno}: need at least one feature and a label"));
            }
            let raw = cells[cells.len() - 1].trim();
            let label: i64 = raw
                .parse()
                .map_err(|_| format!("line {lineno}: label '{raw}' is not an integer"))?;
            if label < 0 {
                return Err(format!("line {lineno}: label {label} is negative"));
            }
            labels.push(label as usize);
            &cells[..cells.len() - 1]
        } else {
            &cells[..]
        };
        let mut row = Vec::with_capacity(value_cells.len());
        for cell in value_cells {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| format!("line {lineno}: cell '{}' is not a number", cell.trim()))?;
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err("no data rows".into());
    }
    let d = rows[0].len();
    let mut x = Array2::zeros((rows.len(), d));
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            x[(i, j)] = v;
        }
    }
    Dataset::new(x, if has_label { Some(labels) } else { None }).map_err(|e| e.to_string())
}

/// Loads sparse "label idx:val …" text with 1-based, strictly increasing
/// indices, densified to N×D.
pub fn load_libsvm(path: &Path, d: usize) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    parse_libsvm(&text, d).map_err(|m| CliError::Data(format!("{}: {m}", path.display())))
}

fn parse_libsvm(text: &str, d: usize) -> std::result::Result<Dataset, String> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let label_raw = parts
            .next()
            .ok_or_else(|| format!("line {lineno}: missing label"))?;
        let label: i64 = label_raw
            .trim_start_matches('+')
            .parse()
            .map_err(|_| format!("line {lineno}: label '{label_raw}' is not an integer"))?;
        // LibSVM commonly uses ±1; shift negatives into 0-based classes.
        let label = if label < 0 { 0 } else { label as usize };
        let mut row = vec![0.0; d];
        let mut last_idx = 0usize;
        for token in parts {
            let (idx_raw, val_raw) = token
                .split_once(':')
                .ok_or_else(|| format!("line {lineno}: token '{token}' is not idx:val"))?;
            let idx: usize = idx_raw
                .parse()
                .map_err(|_| format!("line {lineno}: index '{idx_raw}' is not an integer"))?;
            if idx == 0 || idx > d {
                return Err(format!("line {lineno}: index {idx} outside 1..={d}"));
            }
            if idx <= last_idx {
                return Err(format!(
                    "line {lineno}: index {idx} not strictly increasing after {last_idx}"
                ));
            }
            last_idx = idx;
            let val: f64 = val_raw
                .parse()
                .map_err(|_| format!("line {lineno}: value '{val_raw}' is not a number"))?;
            row[idx - 1] = val;
        }
        rows.push(row);
        labels.push(label);
    }
    if rows.is_empty() {
        return Err("no data rows".into());
    }
    let mut x = Array2::zeros((rows.len(), d));
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            x[(i, j)] = v;
        }
    }
    Dataset::new(x, Some(labels)).map_err(|e| e.to_string())
}

/// Writes a dataset as headerless CSV, labels (if any) in the last column.
pub fn write_dataset_csv(path: &Path, ds: &Dataset) -> Result<()> {
    let mut out = String::new();
    for i in 0..ds.num_samples() {
        let cells: Vec<String> = (0..ds.num_dims())
            .map(|j| format!("{:.17e}", ds.x[(i, j)]))
            .collect();
        out.push_str(&cells.join(","));
        if let Some(ref labels) = ds.labels {
            out.push(',');
            out.push_str(&labels[i].to_string());
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}
