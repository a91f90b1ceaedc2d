//! Reading JSON and CSV inputs and comma-separated flag values.

use std::path::Path;

use serde::de::DeserializeOwned;
use tropadel::rational::{self, Rat};

use crate::Failure;

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// Numeric CSV with a header row and exactly `columns` columns.
pub fn read_csv(path: &Path, columns: usize) -> Result<Vec<Vec<f64>>, Failure> {
    let at = |e: &dyn std::fmt::Display| Failure::Input(format!("{}: {e}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| at(&e))?;
    let width = reader.headers().map_err(|e| at(&e))?.len();
    if width != columns {
        return Err(at(&format!("expected {columns} columns, header has {width}")));
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| at(&e))?;
        let row = record
            .iter()
            .map(|field| field.parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| at(&format!("row {}: {e}", line + 1)))?;
        rows.push(row);
    }
    Ok(rows)
}

fn split(text: &str) -> impl Iterator<Item = &str> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty())
}

pub fn parse_rat_list(text: &str) -> Result<Vec<Rat>, Failure> {
    split(text)
        .map(|s| rational::parse_rat(s).map_err(|e| Failure::Input(e.to_string())))
        .collect()
}

pub fn parse_u64_list(text: &str) -> Result<Vec<u64>, Failure> {
    split(text)
        .map(|s| s.parse().map_err(|_| Failure::Input(format!("`{s}` is not a nonnegative integer"))))
        .collect()
}

pub fn parse_usize_list(text: &str) -> Result<Vec<usize>, Failure> {
    split(text)
        .map(|s| s.parse().map_err(|_| Failure::Input(format!("`{s}` is not an index"))))
        .collect()
}
