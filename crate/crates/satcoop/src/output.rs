//! Deterministic table serialization.
//!
//! Every experiment emits an [`OutputTable`]: a header row plus rows of
//! cells. Floats are serialized with 9 significant digits using one shared
//! formatter, and the optional JSON mirror reuses the exact same numeral
//! strings, so CSV and JSON agree to string equality and files are
//! byte-reproducible from (config, seed).

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("table is empty")]
    EmptyTable,
}

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}
impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Column names plus rows.
#[derive(Debug, Clone, Default)]
pub struct OutputTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl OutputTable {
    pub fn new<S: Into<String>>(columns: Vec<S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let fields: Vec<String> = row.iter().map(cell_to_string).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    /// JSON mirror `{"columns": […], "rows": [[…], …]}` with numerals
    /// identical to the CSV ones.
    pub fn to_json(&self) -> String {
        let mut out = String::from("{\n  \"columns\": [");
        let cols: Vec<String> = self.columns.iter().map(|c| json_escape(c)).collect();
        out.push_str(&cols.join(", "));
        out.push_str("],\n  \"rows\": [\n");
        for (i, row) in self.rows.iter().enumerate() {
            let fields: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Text(s) => json_escape(s),
                    other => cell_to_string(other),
                })
                .collect();
            let _ = write!(out, "    [{}]", fields.join(", "));
            out.push_str(if i + 1 < self.rows.len() { ",\n" } else { "\n" });
        }
        out.push_str("  ]\n}\n");
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), OutputError> {
        if self.rows.is_empty() {
            return Err(OutputError::EmptyTable);
        }
        write_file(path, self.to_csv().as_bytes())
    }

    pub fn write_json(&self, path: &Path) -> Result<(), OutputError> {
        if self.rows.is_empty() {
            return Err(OutputError::EmptyTable);
        }
        write_file(path, self.to_json().as_bytes())
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), OutputError> {
    let io = |source| OutputError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(bytes).map_err(io)
}

fn cell_to_string(cell: &Cell) -> String {
    match cell {
        Cell::Int(v) => v.to_string(),
        Cell::Float(v) => format_sig9(*v),
        Cell::Text(s) => s.clone(),
    }
}

fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Format with 9 significant digits: positional notation for moderate
/// exponents (8.005e8 → `800500000`), scientific otherwise, trailing
/// fractional zeros trimmed.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "NaN".to_string()
        } else if v > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    // 9 significant digits via the scientific formatter.
    let sci = format!("{:.8e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("valid exponent");
    if (-4..=12).contains(&exp) {
        let digits = 8 - exp; // decimals needed for 9 significant digits
        let s = if digits <= 0 {
            format!("{:.0}", mantissa.parse::<f64>().unwrap() * 10f64.powi(exp))
        } else {
            format!("{:.*}", digits as usize, v)
        };
        trim_zeros(s)
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let trimmed = s.trim_end_matches('0').trim_end_matches('.');
    if trimmed == "-0" {
        "0".to_string()
    } else {
        trimmed.to_string()
    }
}
