//! Batch runner behind the `eckart` binary: scenario files, figure presets
//! and oracle verification, all writing plain CSV.

pub mod config;
pub mod figures;
pub mod scenario;
pub mod verify;

use std::fmt;
use std::path::Path;

use eckart_core::csv_out::{fmt_float, CsvTable};
use eckart_core::Complex;

/// Failures reported by the binary; each maps to one exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or invalid input, unknown figure name, unwritable output (exit 2).
    Config(String),
    /// A computation failed or a check missed its tolerance (exit 3).
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<eckart_core::Error> for CliError {
    fn from(e: eckart_core::Error) -> Self {
        match e {
            eckart_core::Error::Domain(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

/// One CSV file to be written by the collector.
#[derive(Clone, Debug)]
pub struct Artifact {
    pub file_name: String,
    pub table: CsvTable,
}

impl Artifact {
    pub fn new(file_name: impl Into<String>, table: CsvTable) -> Self {
        Artifact { file_name: file_name.into(), table }
    }
}

/// Writes every artifact into `dir`, in order, from the calling thread.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
    for a in artifacts {
        let path = dir.join(&a.file_name);
        a.table.write(&path).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

/// A named scalar with an optional imaginary part, as listed in summaries.
#[derive(Clone, Debug)]
pub struct Scalar {
    pub quantity: String,
    pub value: Complex,
}

impl Scalar {
    pub fn real(quantity: &str, v: f64) -> Self {
        Scalar { quantity: quantity.into(), value: Complex::new(v, 0.0) }
    }

    pub fn complex(quantity: &str, v: Complex) -> Self {
        Scalar { quantity: quantity.into(), value: v }
    }
}

pub fn scalar_table(rows: &[Scalar], units: &str) -> CsvTable {
    let mut t = CsvTable::new(&["quantity", "re_value", "im_value"], 0.0, units);
    for r in rows {
        t.push_row(vec![r.quantity.clone(), fmt_float(r.value.re), fmt_float(r.value.im)]);
    }
    t
}

/// A captioned value compared against the computed one.
#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn new(name: &str, value: f64, expected: f64, tolerance: f64) -> Self {
        Check { name: name.into(), value, expected, tolerance }
    }

    pub fn passes(&self) -> bool {
        (self.value - self.expected).abs() <= self.tolerance
    }
}

pub fn check_table(checks: &[Check]) -> CsvTable {
    let mut t = CsvTable::new(&["check", "value", "expected", "tolerance", "pass"], 0.0, "dimensionless");
    for c in checks {
        t.push_row(vec![
            c.name.clone(),
            fmt_float(c.value),
            fmt_float(c.expected),
            fmt_float(c.tolerance),
            c.passes().to_string(),
        ]);
    }
    t
}
