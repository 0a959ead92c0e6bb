//! Deterministic CSV tables with a `#` metadata header.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fisher::Convention;
use crate::sweep::config::{SweepConfig, BEGIN_CONFIG, END_CONFIG};

/// Row markers for grid points that could not be computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flag {
    Unstable,
    NoGround,
    Trunc,
    Invalid,
}

impl Flag {
    pub fn as_str(self) -> &'static str {
        match self {
            Flag::Unstable => "UNSTABLE",
            Flag::NoGround => "NOGROUND",
            Flag::Trunc => "TRUNC",
            Flag::Invalid => "INVALID",
        }
    }

    pub fn from_error(e: &Error) -> Flag {
        match e {
            Error::UnstableRegime(_) | Error::Stability { .. } => Flag::Unstable,
            Error::Truncation(_) => Flag::Trunc,
            _ => Flag::Invalid,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    pub fn flag(flag: Option<Flag>) -> Cell {
        Cell::Text(flag.map_or("", Flag::as_str).to_string())
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            Cell::Text(_) => None,
        }
    }

    fn render(&self, out: &mut String) {
        match self {
            Cell::Num(v) => out.push_str(&format_float(*v)),
            Cell::Int(v) => {
                let _ = write!(out, "{v}");
            }
            Cell::Text(s) => out.push_str(s),
        }
    }
}

/// 17 significant digits in scientific notation; enough to round-trip any double.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.16e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem, e.g. `fig7b`.
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width differs from header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of a column, NaN for text cells.
    pub fn numbers(&self, name: &str) -> Vec<f64> {
        match self.column(name) {
            Some(j) => self.rows.iter().map(|r| r[j].as_f64().unwrap_or(f64::NAN)).collect(),
            None => Vec::new(),
        }
    }

    pub fn texts(&self, name: &str) -> Vec<String> {
        match self.column(name) {
            Some(j) => self
                .rows
                .iter()
                .map(|r| match &r[j] {
                    Cell::Text(s) => s.clone(),
                    other => {
                        let mut s = String::new();
                        other.render(&mut s);
                        s
                    }
                })
                .collect(),
            None => Vec::new(),
        }
    }

    /// Header row followed by the data rows.
    pub fn body(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                c.render(&mut out);
            }
            out.push('\n');
        }
        out
    }

    /// Full file contents: metadata, embedded config, header row and data.
    pub fn to_csv(&self, cfg: &SweepConfig, convention: Option<Convention>) -> String {
        let mut out = metadata(cfg, &self.name, convention);
        out.push_str(&self.body());
        out
    }
}

/// The `#` header shared by every file a run writes.
pub fn metadata(cfg: &SweepConfig, table: &str, convention: Option<Convention>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# critchain {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "# table = {table}");
    match convention {
        Some(c) => {
            let _ = writeln!(out, "# convention = {}", c.label());
        }
        None => out.push_str("# convention = none\n"),
    }
    out.push_str(BEGIN_CONFIG);
    out.push('\n');
    for line in cfg.to_text(false).lines() {
        if line.is_empty() {
            out.push_str("#\n");
        } else {
            let _ = writeln!(out, "# {line}");
        }
    }
    out.push_str(END_CONFIG);
    out.push('\n');
    out
}

/// Reads the data part of a file written by [`Table::to_csv`]; every cell comes back as text.
pub fn read_body(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Config("CSV has no header row".into()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, l) in lines.enumerate() {
        let row: Vec<String> = l.split(',').map(str::to_string).collect();
        if row.len() != header.len() {
            return Err(Error::Config(format!(
                "CSV row {} has {} cells, header has {}",
                i + 1,
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok((header, rows))
}
