use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Provenance written next to every table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub columns: Vec<String>,
    /// Scalar results that do not fit the row layout.
    pub summary: BTreeMap<String, f64>,
    /// Canonical TOML of the validated config; re-running it reproduces the table.
    pub config: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
    pub metadata: Metadata,
}

impl ResultTable {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<f64>>, mut metadata: Metadata) -> Result<Self> {
        if columns.is_empty() {
            return Err(CliError::Table("no columns".into()));
        }
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != columns.len()) {
            return Err(CliError::Table(format!(
                "row {i} has {} values for {} columns",
                r.len(),
                columns.len()
            )));
        }
        metadata.columns = columns.clone();
        Ok(Self { columns, rows, metadata })
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| CliError::Table(e.to_string());
        w.write_record(&self.columns).map_err(fail)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format_value(*v))).map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Table(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Table(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.metadata).map_err(|e| CliError::Table(e.to_string()))
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let csv_path = dir.join(format!("{stem}.csv"));
        let json_path = dir.join(format!("{stem}.json"));
        let csv = self.to_csv()?;
        let json = self.to_json()? + "\n";
        std::fs::write(&csv_path, csv).map_err(|e| CliError::io(&csv_path, e))?;
        std::fs::write(&json_path, json).map_err(|e| CliError::io(&json_path, e))?;
        Ok((csv_path, json_path))
    }
}

/// Parses a CSV written by [`ResultTable::to_csv`] into header and rows.
pub fn read_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let fail = |e: csv::Error| CliError::Table(e.to_string());
    let header = r.headers().map_err(fail)?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(fail)?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| CliError::Table(format!("`{s}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// Shortest round-trip decimal, switching to exponent form for very small or
/// very large magnitudes.
pub fn format_value(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> Metadata {
        Metadata {
            tool: "t".into(),
            version: "0".into(),
            experiment: "sweep".into(),
            config_hash: String::new(),
            seed: 0,
            columns: vec![],
            summary: BTreeMap::new(),
            config: String::new(),
        }
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let r = ResultTable::new(vec!["a".into(), "b".into()], vec![vec![1.0]], meta());
        assert!(matches!(r, Err(CliError::Table(_))));
    }

    #[test]
    fn csv_round_trips_exactly() {
        let vals = vec![vec![0.0, 1.0 / 3.0], vec![-2.5e-9, 7.1e17], vec![1e-4, -0.0]];
        let t = ResultTable::new(vec!["a".into(), "b".into()], vals.clone(), meta()).unwrap();
        let (h, rows) = read_csv(&t.to_csv().unwrap()).unwrap();
        assert_eq!(h, ["a", "b"]);
        assert_eq!(rows, vals);
    }
}
