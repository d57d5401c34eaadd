//! In-memory output files, flushed to disk only after a run succeeds.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const SCHEMA: &str = "sohkit-1";

/// Floats use 17 significant digits so every value parses back bit-exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(u64),
    S(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::F)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::I(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::I(x as u64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::S(s.to_string())
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self { header: header.iter().map(|h| h.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::F(x) => fmt_f64(*x),
                    Cell::I(i) => i.to_string(),
                    Cell::S(s) => s.clone(),
                    Cell::Empty => String::new(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out.into_bytes()
    }
}

/// Files produced by a run, keyed by name.
#[derive(Debug, Default)]
pub struct Outputs {
    files: BTreeMap<String, Vec<u8>>,
}

impl Outputs {
    pub fn csv(&mut self, name: &str, t: &Table) {
        self.files.insert(name.to_string(), t.to_bytes());
    }

    pub fn json(&mut self, name: &str, v: &impl Serialize) {
        let mut bytes = serde_json::to_vec_pretty(v).expect("reports serialize");
        bytes.push(b'\n');
        self.files.insert(name.to_string(), bytes);
    }

    pub fn raw(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.insert(name.to_string(), bytes);
    }

    pub fn names(&self) -> Vec<String> {
        self.files.keys().cloned().collect()
    }

    pub fn write_all(&self, dir: &Path) -> Result<(), CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }
}

/// Policy events and flagged readings collected during a run.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Warnings {
    /// Event name -> count; every event kind a subcommand can trigger is listed.
    pub counts: BTreeMap<String, u64>,
    /// Interpretive choices the outputs depend on.
    pub flagged_readings: Vec<String>,
}

impl Warnings {
    pub fn count(&mut self, name: &str, n: u64) {
        *self.counts.entry(name.to_string()).or_insert(0) += n;
    }

    pub fn flag(&mut self, note: &str) {
        self.flagged_readings.push(note.to_string());
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub schema: &'static str,
    pub kind: &'static str,
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'a str,
    pub config_hash: String,
    pub config: &'a serde_json::Value,
    pub threads: usize,
    pub wall_time_s: f64,
    pub warnings: &'a Warnings,
    pub files: Vec<String>,
}

/// SHA-256 of the canonical JSON form of the resolved configuration.
pub fn config_hash(config: &serde_json::Value) -> String {
    let canonical = serde_json::to_vec(config).expect("config serializes");
    Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, -1e-300, 5e-324, f64::MAX, 0.0, -0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["a", "b", "c"]);
        t.push(vec![Cell::F(0.5), Cell::I(3), Cell::Empty]);
        assert_eq!(String::from_utf8(t.to_bytes()).unwrap(), "a,b,c\n5.0000000000000000e-1,3,\n");
    }

    #[test]
    fn hash_is_stable() {
        let v = serde_json::json!({"a": 1, "b": [1.5, 2]});
        assert_eq!(config_hash(&v), config_hash(&v.clone()));
        assert_eq!(config_hash(&v).len(), 64);
    }
}
