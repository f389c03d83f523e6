//! CSV tables with a provenance header line.
//!
//! Floats are written with `Display`, the shortest representation that
//! parses back to the same bits; infinities are written `inf`.

use std::fmt::Write as _;

use qspec::config::EmitterConfig;
use qspec::EmitterModel;
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Num(f64),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

/// SHA-256 of the canonical JSON form of the model.
pub fn model_hash(model: &EmitterModel, unit: &str) -> String {
    let canonical = serde_json::to_string(&EmitterConfig::from_model(model, unit)).expect("plain data serializes");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, model_hash: &str) -> String {
        let mut s = format!("# schema-version: {SCHEMA_VERSION}, model-hash: {model_hash}\n");
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for row in &self.rows {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                match c {
                    Cell::Text(t) => s.push_str(t),
                    Cell::Num(v) => write!(s, "{v}").expect("writing to a String"),
                }
            }
            s.push('\n');
        }
        s
    }
}

/// Parsed form of a rendered table: header fields, column names, and raw
/// cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTable {
    pub schema_version: u32,
    pub model_hash: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ParsedTable {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut lines = text.lines();
        let header = lines.next().ok_or("empty table")?;
        let rest = header
            .strip_prefix("# schema-version: ")
            .ok_or("missing provenance header")?;
        let (version, hash) = rest.split_once(", model-hash: ").ok_or("malformed provenance header")?;
        let columns: Vec<String> = lines
            .next()
            .ok_or("missing column header")?
            .split(',')
            .map(String::from)
            .collect();
        let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
        if rows.iter().any(|r| r.len() != columns.len()) {
            return Err("ragged row".into());
        }
        Ok(Self {
            schema_version: version.parse().map_err(|_| "bad schema version")?,
            model_hash: hash.to_string(),
            columns,
            rows,
        })
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }

    pub fn numbers(&self, name: &str) -> Option<Vec<f64>> {
        self.column(name)?.into_iter().map(|s| s.parse().ok()).collect()
    }
}
