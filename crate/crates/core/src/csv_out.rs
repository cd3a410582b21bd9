//! Minimal CSV writer shared by the table exports.
//!
//! Every file starts with one `#` comment line holding `key=value` metadata
//! (always including `log_scale` and `units`), then a header row, then data.
//! Floats are written with 17 significant digits.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

/// A table ready to be written as CSV.
#[derive(Clone, Debug, Default)]
pub struct CsvTable {
    pub metadata: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Formats a float with 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

impl CsvTable {
    pub fn new(header: &[&str], log_scale: f64, units: &str) -> Self {
        CsvTable {
            metadata: vec![("log_scale".into(), fmt_float(log_scale)), ("units".into(), units.into())],
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.push((key.into(), value.to_string()));
        self
    }

    pub fn push_floats(&mut self, values: &[f64]) {
        self.rows.push(values.iter().map(|v| fmt_float(*v)).collect());
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::from("#");
        for (k, v) in &self.metadata {
            let _ = write!(out, " {k}={v}");
        }
        out.push('\n');
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> io::Result<()> {
        std::fs::write(path, self.render())
    }
}

/// Parses a table produced by [`CsvTable::render`] back into metadata, header and float rows.
pub fn parse_float_table(text: &str) -> Option<(Vec<(String, String)>, Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let meta = lines
        .next()?
        .strip_prefix('#')?
        .split_whitespace()
        .filter_map(|kv| kv.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())))
        .collect();
    let header = lines.next()?.split(',').map(str::to_string).collect();
    let rows = lines
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(|c| c.parse().unwrap_or(f64::NAN)).collect())
        .collect();
    Some((meta, header, rows))
}
