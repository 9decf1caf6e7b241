//! Table, summary and heatmap writers.
//!
//! Floats in CSV use `{:.16e}`, seventeen significant digits, which
//! round-trips binary64 exactly. Everything here is a pure function of its
//! input so reruns are byte-identical.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use dowsim_core::Wavefield;
use serde_json::Value;

use crate::config::Format;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    U(u64),
    S(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::F(v) => format!("{v:.16e}"),
            Cell::U(v) => v.to_string(),
            Cell::S(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::U(v) => Value::from(*v),
            Cell::S(s) => Value::from(s.as_str()),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::U(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::U(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_owned())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::F)
    }
}

/// A named table with fixed column order.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &'static str, columns: &[&'static str]) -> Self {
        Self {
            name,
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> CliResult<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Runtime(e.to_string()))
    }

    /// `{"columns": [...], "rows": [[...], ...]}`, keeping column order.
    pub fn to_json(&self) -> CliResult<String> {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
            .collect();
        let v = serde_json::json!({ "columns": self.columns, "rows": rows });
        Ok(serde_json::to_string_pretty(&v)? + "\n")
    }
}

/// Everything a command writes, collected before touching the disk.
#[derive(Debug, Default)]
pub struct Outputs {
    pub tables: Vec<Table>,
    pub heatmaps: Vec<(String, Vec<u8>)>,
    /// Deterministic results.
    pub summary: serde_json::Map<String, Value>,
}

impl Outputs {
    pub fn set(&mut self, key: &str, v: impl Into<Value>) {
        self.summary.insert(key.to_owned(), v.into());
    }

    /// Writes tables, heatmaps and `summary.json` into `dir`. Returns the
    /// paths written.
    pub fn write(&self, dir: &Path, format: Format) -> CliResult<Vec<PathBuf>> {
        let mut written = Vec::new();
        for t in &self.tables {
            let (ext, body) = match format {
                Format::Csv => ("csv", t.to_csv()?),
                Format::Json => ("json", t.to_json()?),
            };
            let p = dir.join(format!("{}.{ext}", t.name));
            fs::write(&p, body)?;
            written.push(p);
        }
        for (name, bytes) in &self.heatmaps {
            let p = dir.join(name);
            fs::write(&p, bytes)?;
            written.push(p);
        }
        let p = dir.join("summary.json");
        fs::write(&p, serde_json::to_string_pretty(&self.summary)? + "\n")?;
        written.push(p);
        Ok(written)
    }
}

/// 8-bit binary PGM of `|psi|^2` scaled to its maximum. A 1D field becomes
/// a single row; in 2D the top row is the largest `y`.
pub fn heatmap_pgm(psi: &Wavefield) -> Vec<u8> {
    let grid = psi.grid();
    let n = grid.n();
    let rows = if grid.dim() == 2 { n } else { 1 };
    let p = psi.probabilities();
    let max = p.iter().copied().fold(0.0, f64::max);
    let scale = if max > 0.0 { 255.0 / max } else { 0.0 };
    let mut out = Vec::with_capacity(n * rows + 20);
    write!(out, "P5\n{n} {rows}\n255\n").expect("writing to a Vec");
    for r in (0..rows).rev() {
        out.extend(
            p[r * n..(r + 1) * n]
                .iter()
                .map(|v| (v * scale).round().clamp(0.0, 255.0) as u8),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use dowsim_core::{gaussian_packet, GridSpec, Position};

    #[test]
    fn floats_round_trip() {
        let mut t = Table::new("t", &["a", "b", "c"]);
        let x = 0.1 + 0.2;
        t.push(vec![x.into(), 7u64.into(), Cell::Empty]);
        let text = t.to_csv().unwrap();
        let field = text.lines().nth(1).unwrap().split(',').next().unwrap();
        assert_eq!(field.parse::<f64>().unwrap(), x);
        assert_eq!(text, "a,b,c\n3.0000000000000004e-1,7,\n");
    }

    #[test]
    fn json_keeps_column_order() {
        let mut t = Table::new("t", &["z", "a"]);
        t.push(vec![1.5.into(), "x".into()]);
        let v: Value = serde_json::from_str(&t.to_json().unwrap()).unwrap();
        assert_eq!(v["columns"], serde_json::json!(["z", "a"]));
        assert_eq!(v["rows"][0], serde_json::json!([1.5, "x"]));
    }

    #[test]
    fn pgm_layout() {
        let g = GridSpec::square(32, -8.0, 8.0).unwrap();
        let psi = gaussian_packet(g, Position::at_xy(0.0, 3.0), 1.0, [0.0; 2]).unwrap();
        let img = heatmap_pgm(&psi);
        let header = b"P5\n32 32\n255\n";
        assert_eq!(&img[..header.len()], header);
        let pixels = &img[header.len()..];
        assert_eq!(pixels.len(), 1024);
        assert_eq!(*pixels.iter().max().unwrap(), 255);
        // The packet sits above the centre, so the brightest row is in the
        // upper half of the image.
        let brightest = pixels.iter().position(|&v| v == 255).unwrap() / 32;
        assert!(brightest < 16);
    }
}
