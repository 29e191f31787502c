//! CSV sample ingestion: one observation per row, no header.

use std::path::Path;

use incomplete_core::measure::Sample;

use crate::error::{CliError, Result};

/// How the cells of the data file are interpreted.
pub enum Format<'a> {
    /// Any finite number.
    Real,
    /// `0` or `1`.
    Binary,
    /// An atom label or a 0-based atom index.
    Atoms(&'a [String]),
}

pub fn ingest_sample(path: &Path, format: Format<'_>) -> Result<Sample> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| CliError::Data(format!("row {row}: {e}")))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != 1 {
            return Err(CliError::Data(format!("row {row}: expected one column, found {}", record.len())));
        }
        let cell = &record[0];
        let value = match format {
            Format::Real => parse_number(cell, row)?,
            Format::Binary => match parse_number(cell, row)? {
                v if v == 0.0 || v == 1.0 => v,
                v => return Err(CliError::Data(format!("row {row}, column 1: {v} is not 0 or 1"))),
            },
            Format::Atoms(labels) => match labels.iter().position(|l| l == cell) {
                Some(k) => k as f64,
                None => match cell.parse::<usize>() {
                    Ok(k) if k < labels.len() => k as f64,
                    _ => {
                        return Err(CliError::Data(format!(
                            "row {row}, column 1: '{cell}' is neither a label nor an index below {}",
                            labels.len()
                        )))
                    }
                },
            },
        };
        values.push(value);
    }
    if values.is_empty() {
        return Err(CliError::Data("empty sample".into()));
    }
    Sample::new(values).map_err(|e| CliError::Data(e.to_string()))
}

fn parse_number(cell: &str, row: usize) -> Result<f64> {
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(CliError::Data(format!("row {row}, column 1: '{cell}' is not a finite number"))),
    }
}
