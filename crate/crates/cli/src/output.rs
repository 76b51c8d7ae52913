//! Rendering results as text, CSV or JSON.

use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use serde_json::Value;

use crate::dataset::fmt_num;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Missing,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Num)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Text(x.to_string())
    }
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Num(x) => sig6(*x),
            Cell::Int(k) => k.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => "NA".into(),
        }
    }

    fn csv(&self) -> String {
        match self {
            Cell::Num(x) if x.is_finite() => fmt_num(*x),
            Cell::Num(_) | Cell::Missing => "NA".into(),
            Cell::Int(k) => k.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// `%g`-style rendering with 6 significant digits.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "NaN".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    // round first so the exponent reflects carries such as 999999.7 -> 1e6
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn render_text(&self) -> String {
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Cell::text).collect()).collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|j| cells.iter().map(|r| r[j].len()).chain([self.columns[j].len()]).max().unwrap_or(0))
            .collect();
        let line = |items: Vec<&str>| -> String {
            let padded: Vec<String> = items.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect();
            padded.join("  ").trim_end().to_string() + "\n"
        };
        let mut out = line(self.columns.iter().map(String::as_str).collect());
        for r in &cells {
            out += &line(r.iter().map(String::as_str).collect());
        }
        out
    }

    fn render_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let wrap = |e: csv::Error| CliError::Input(format!("writing CSV: {e}"));
        w.write_record(&self.columns).map_err(wrap)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::csv)).map_err(wrap)?;
        }
        w.into_inner().map_err(|e| CliError::Input(format!("writing CSV: {e}")))
    }
}

/// What a command produces: summary lines, one table, and a JSON document
/// carrying the same content at full precision.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub summary: Vec<(String, Cell)>,
    pub table: Table,
    pub json: Value,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn text(&self) -> String {
        let mut out = String::new();
        let width = self.summary.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in &self.summary {
            out += &format!("{k:<width$}  {}\n", v.text());
        }
        if !self.table.rows.is_empty() {
            if !out.is_empty() {
                out.push('\n');
            }
            out += &self.table.render_text();
        }
        out
    }

    pub fn render(&self, format: Format) -> Result<Vec<u8>> {
        match format {
            Format::Csv => self.table.render_csv(),
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json)
                    .map_err(|e| CliError::Numerical(format!("serialising JSON: {e}")))?;
                s.push('\n');
                Ok(s.into_bytes())
            }
        }
    }

    /// Text on stdout, plus the machine-readable form in `out` when given.
    /// Without `out`, a requested `format` replaces the text on stdout.
    pub fn emit(&self, format: Option<Format>, out: Option<&Path>) -> Result<()> {
        for w in &self.warnings {
            eprintln!("warning: {w}");
        }
        let stdout = std::io::stdout();
        let mut stdout = stdout.lock();
        let io = |e| CliError::io("stdout", e);
        match (out, format) {
            (Some(path), f) => {
                let f = f.unwrap_or_else(|| guess_format(path));
                std::fs::write(path, self.render(f)?).map_err(|e| CliError::io(path.display().to_string(), e))?;
                stdout.write_all(self.text().as_bytes()).map_err(io)
            }
            (None, Some(f)) => stdout.write_all(&self.render(f)?).map_err(io),
            (None, None) => stdout.write_all(self.text().as_bytes()).map_err(io),
        }
    }
}

fn guess_format(path: &Path) -> Format {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
        _ => Format::Csv,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (0.1, "0.1"),
            (7.054_123_4e-3, "0.00705412"),
            (123_456.7, "123457"),
            (999_999.7, "1e6"),
            (1_234_567.0, "1.23457e6"),
            (1.5e-7, "1.5e-7"),
            (-2.5, "-2.5"),
            (0.754_438_1, "0.754438"),
            (f64::INFINITY, "inf"),
        ];
        for (x, want) in cases {
            assert_eq!(sig6(x), want, "{x}");
        }
    }

    #[test]
    fn csv_keeps_full_precision() {
        let mut t = Table::new(&["x", "y"]);
        t.push(vec![0.1f64.into(), Cell::Missing]);
        t.push(vec![(1.0f64 / 3.0).into(), 3u64.into()]);
        let s = String::from_utf8(t.render_csv().unwrap()).unwrap();
        assert_eq!(s, "x,y\n0.1,NA\n0.3333333333333333,3\n");
    }
}
