//! Result tables, their CSV form and the run manifest.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

/// Significant digits written for every real.
pub const SIG_DIGITS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColumnKind {
    Real,
    Int,
    Text,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
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

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// `%.12g`-style formatting: fixed notation for exponents in `[-5, 12)`,
/// scientific otherwise, trailing zeros trimmed.
pub fn format_real(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Real(v) => format_real(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Real(v) => Some(v),
            Cell::Int(v) => Some(v as f64),
            _ => None,
        }
    }

    pub fn as_u64(&self) -> Option<u64> {
        match *self {
            Cell::Int(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    pub schema: Vec<(&'static str, ColumnKind)>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("header {found:?} does not match schema {expected:?}")]
    Header { expected: Vec<String>, found: Vec<String> },
    #[error("row {row}, column {column}: cannot parse {value:?}")]
    Value { row: usize, column: String, value: String },
}

impl ResultTable {
    pub fn new(schema: Vec<(&'static str, ColumnKind)>) -> Self {
        Self { schema, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.schema.len(), "row width does not match the schema");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|(n, _)| *n == name)
    }

    /// Cells of column `name`.
    pub fn values(&self, name: &str) -> Vec<&Cell> {
        let i = self.column(name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows.iter().map(|r| &r[i]).collect()
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(self.schema.iter().map(|(n, _)| *n)).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    /// Reads CSV written with `schema`, checking the header exactly.
    pub fn from_csv(schema: Vec<(&'static str, ColumnKind)>, bytes: &[u8]) -> Result<Self, CsvError> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let expected: Vec<String> = schema.iter().map(|(n, _)| n.to_string()).collect();
        if header != expected {
            return Err(CsvError::Header { expected, found: header });
        }
        let mut table = Self::new(schema);
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let mut row = Vec::with_capacity(rec.len());
            for (j, field) in rec.iter().enumerate() {
                let (name, kind) = table.schema[j];
                let bad = || CsvError::Value {
                    row: i,
                    column: name.to_string(),
                    value: field.to_string(),
                };
                let cell = if field.is_empty() {
                    Cell::Empty
                } else {
                    match kind {
                        ColumnKind::Real => Cell::Real(field.parse().map_err(|_| bad())?),
                        ColumnKind::Int => Cell::Int(field.parse().map_err(|_| bad())?),
                        ColumnKind::Text => Cell::Text(field.to_string()),
                    }
                };
                row.push(cell);
            }
            table.rows.push(row);
        }
        Ok(table)
    }
}

/// Everything needed to reproduce a CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub core_version: String,
    pub rng: String,
    pub experiment: String,
    pub seed: u64,
    pub config: RunConfig,
    pub threads: usize,
    pub wall_time_seconds: f64,
    pub output: PathBuf,
    pub rows: usize,
    pub sha256: String,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialises") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// `<csv>.manifest.json`.
pub fn manifest_path(csv: &std::path::Path) -> PathBuf {
    let mut name = csv.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_formatting() {
        assert_eq!(format_real(0.75), "0.75");
        assert_eq!(format_real(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_real(1024.0), "1024");
        assert_eq!(format_real(-2.5e-7), "-2.5e-7");
        assert_eq!(format_real(1.23456789012345e15), "1.23456789012e15");
        assert_eq!(format_real(123456.7890123456), "123456.789012");
        assert_eq!(format_real(0.0), "0");
    }

    #[test]
    fn formatting_is_stable_under_reparse() {
        for x in [0.1, 2.0 / 3.0, 1e-12, 9.99999999999951e-1, 12345678901234.0, -0.047] {
            let s = format_real(x);
            let y: f64 = s.parse().unwrap();
            assert_eq!(format_real(y), s);
            assert!(((x - y) / x).abs() < 1e-11);
        }
    }

    #[test]
    fn csv_round_trip() {
        let schema = vec![("name", ColumnKind::Text), ("x", ColumnKind::Real), ("n", ColumnKind::Int)];
        let mut t = ResultTable::new(schema.clone());
        t.push(vec!["a,b \"q\"".into(), 0.1.into(), 3u64.into()]);
        t.push(vec!["plain".into(), Cell::Empty, 7u64.into()]);
        let bytes = t.to_csv();
        assert!(!bytes.contains(&b'\r'));
        let back = ResultTable::from_csv(schema.clone(), &bytes).unwrap();
        assert_eq!(back.to_csv(), bytes);
        let wrong = vec![("name", ColumnKind::Text), ("y", ColumnKind::Real), ("n", ColumnKind::Int)];
        assert!(matches!(ResultTable::from_csv(wrong, &bytes), Err(CsvError::Header { .. })));
    }
}
