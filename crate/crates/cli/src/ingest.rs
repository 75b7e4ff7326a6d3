//! CSV ingestion: header required, response selected by column name, rows
//! with missing values dropped (and counted), non-numeric cells rejected
//! with their row and column.

use std::path::Path;

use anyhow::{bail, Context, Result};
use nalgebra::{DMatrix, DVector};
use subsel::core::Dataset;

/// A loaded CSV: the numeric dataset, the feature column names in file
/// order, and how many rows were dropped for missing values.
#[derive(Debug)]
pub struct IngestReport {
    pub data: Dataset,
    pub feature_names: Vec<String>,
    pub rows_used: usize,
    pub rows_dropped: usize,
}

/// Tokens treated as missing values (case-insensitive).
fn is_missing(field: &str) -> bool {
    matches!(
        field.to_ascii_lowercase().as_str(),
        "" | "na" | "n/a" | "nan" | "null"
    )
}

/// Reads `path`, taking `response` as the outcome column and every other
/// column as a feature. Rows containing missing values are dropped and
/// counted; any other non-numeric (or non-finite) cell is an error naming
/// the row and column.
pub fn load_csv(path: &Path, response: &str) -> Result<IngestReport> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("could not open {}", path.display()))?;

    let headers: Vec<String> = reader
        .headers()
        .with_context(|| format!("could not read header row of {}", path.display()))?
        .iter()
        .map(str::to_owned)
        .collect();
    let response_col = headers.iter().position(|h| h == response).with_context(|| {
        format!(
            "response column '{}' not found in {}; available columns: {}",
            response,
            path.display(),
            headers.join(", ")
        )
    })?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != response_col)
        .map(|(_, h)| h.clone())
        .collect();
    if feature_names.is_empty() {
        bail!("{} has no feature columns besides the response", path.display());
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut y: Vec<f64> = Vec::new();
    let mut rows_dropped = 0usize;
    for (i, record) in reader.records().enumerate() {
        // Header is line 1, so data row i sits on line i + 2.
        let line = i + 2;
        let record = record.with_context(|| format!("row {line} of {}", path.display()))?;
        if record.len() != headers.len() {
            bail!(
                "row {line} of {} has {} fields, expected {}",
                path.display(),
                record.len(),
                headers.len()
            );
        }
        if record.iter().any(is_missing) {
            rows_dropped += 1;
            continue;
        }
        let mut features = Vec::with_capacity(feature_names.len());
        for (j, field) in record.iter().enumerate() {
            let value: f64 = field.parse().ok().filter(|v: &f64| v.is_finite()).with_context(
                || {
                    format!(
                        "non-numeric value '{}' at row {line}, column '{}' of {}",
                        field,
                        headers[j],
                        path.display()
                    )
                },
            )?;
            if j == response_col {
                y.push(value);
            } else {
                features.push(value);
            }
        }
        rows.push(features);
    }

    if rows.is_empty() {
        bail!(
            "{} has no usable rows ({} dropped for missing values)",
            path.display(),
            rows_dropped
        );
    }
    let n = rows.len();
    let p = feature_names.len();
    let x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
    let data = Dataset::new(x, DVector::from_vec(y))?;
    Ok(IngestReport {
        data,
        feature_names,
        rows_used: n,
        rows_dropped,
    })
}
