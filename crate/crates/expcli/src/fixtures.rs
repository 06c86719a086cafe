//! Reference states shipped as matrix documents, checked against their
//! SHA-256 sums on load and conditioned into valid density matrices.

use std::fmt;
use std::str::FromStr;

use embezzle_core::qmat::{ComplexMatrix, DensityMatrix, Split};
use embezzle_core::qstates::MatrixDocument;
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Entries are printed to two decimals; four diagonal entries rounded by up
/// to 0.005 each can move the trace this far.
pub const TRACE_SLACK: f64 = 2e-2;
/// Most negative eigenvalue clipped to zero during conditioning.
pub const EIGEN_SLACK: f64 = 1e-2;

static FILES: &[(&str, &str)] = &[
    ("table1_row1.json", include_str!("../fixtures/table1_row1.json")),
    ("table1_row2.json", include_str!("../fixtures/table1_row2.json")),
    ("table2_row1.json", include_str!("../fixtures/table2_row1.json")),
    ("table2_row2.json", include_str!("../fixtures/table2_row2.json")),
    ("table2_row3.json", include_str!("../fixtures/table2_row3.json")),
    ("table2_row4.json", include_str!("../fixtures/table2_row4.json")),
    ("table2_row5.json", include_str!("../fixtures/table2_row5.json")),
    ("table2_row6.json", include_str!("../fixtures/table2_row6.json")),
    ("table2_row7.json", include_str!("../fixtures/table2_row7.json")),
    ("table2_row8.json", include_str!("../fixtures/table2_row8.json")),
    ("table2_row9.json", include_str!("../fixtures/table2_row9.json")),
    ("table2_row10.json", include_str!("../fixtures/table2_row10.json")),
    ("table2_row11.json", include_str!("../fixtures/table2_row11.json")),
    ("table2_row12.json", include_str!("../fixtures/table2_row12.json")),
    ("table2_row13.json", include_str!("../fixtures/table2_row13.json")),
    ("table2_row14.json", include_str!("../fixtures/table2_row14.json")),
    ("table2_row15.json", include_str!("../fixtures/table2_row15.json")),
    ("table3_row1.json", include_str!("../fixtures/table3_row1.json")),
    ("table3_row2.json", include_str!("../fixtures/table3_row2.json")),
    ("showcase.json", include_str!("../fixtures/showcase.json")),
];

static SUMS: &str = include_str!("../fixtures/SHA256SUMS");

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("no fixture {0}")]
    Unknown(String),
    #[error("checksum mismatch for {0}")]
    Checksum(String),
    #[error("fixture {name} is corrupt: {reason}")]
    Corrupt { name: String, reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Table {
    I,
    II,
    III,
}

impl Table {
    pub const ALL: [Table; 3] = [Table::I, Table::II, Table::III];

    pub fn rows(self) -> usize {
        match self {
            Table::I => 2,
            Table::II => 15,
            Table::III => 2,
        }
    }

    fn stem(self) -> &'static str {
        match self {
            Table::I => "table1",
            Table::II => "table2",
            Table::III => "table3",
        }
    }
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Table::I => "I",
            Table::II => "II",
            Table::III => "III",
        })
    }
}

impl FromStr for Table {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "I" | "1" => Ok(Table::I),
            "II" | "2" => Ok(Table::II),
            "III" | "3" => Ok(Table::III),
            _ => Err(format!("unknown table {s:?}, expected I, II or III")),
        }
    }
}

/// A single shipped state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Fixture {
    /// One-based row.
    Row(Table, usize),
    /// The two-qubit state used for the catalyst dimension study.
    Showcase,
}

impl Fixture {
    pub fn file_name(&self) -> String {
        match self {
            Fixture::Row(t, r) => format!("{}_row{r}.json", t.stem()),
            Fixture::Showcase => "showcase.json".to_string(),
        }
    }

    /// Every row of every table, then the showcase state.
    pub fn all() -> Vec<Fixture> {
        let mut out: Vec<Fixture> = Table::ALL
            .iter()
            .flat_map(|&t| (1..=t.rows()).map(move |r| Fixture::Row(t, r)))
            .collect();
        out.push(Fixture::Showcase);
        out
    }

    pub fn label(&self) -> Option<FixtureLabel> {
        match *self {
            Fixture::Row(Table::I, r) => [0.75, 0.80].get(r.wrapping_sub(1)).map(|&v| FixtureLabel::AvgFidelity(v)),
            Fixture::Row(Table::III, r) => {
                [0.70, 0.75].get(r.wrapping_sub(1)).map(|&v| FixtureLabel::EntanglementFraction(v))
            }
            // Separable states: no numeric label.
            Fixture::Row(Table::II, _) => None,
            Fixture::Showcase => None,
        }
    }
}

impl fmt::Display for Fixture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fixture::Row(t, r) => write!(f, "{t}:{r}"),
            Fixture::Showcase => f.write_str("showcase"),
        }
    }
}

/// Printed value next to a fixture.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FixtureLabel {
    AvgFidelity(f64),
    EntanglementFraction(f64),
}

impl FixtureLabel {
    pub fn value(&self) -> f64 {
        match *self {
            FixtureLabel::AvgFidelity(v) | FixtureLabel::EntanglementFraction(v) => v,
        }
    }

    pub fn quantity(&self) -> &'static str {
        match self {
            FixtureLabel::AvgFidelity(_) => "f",
            FixtureLabel::EntanglementFraction(_) => "F",
        }
    }
}

fn expected_sum(name: &str) -> Option<&'static str> {
    SUMS.lines().find_map(|line| {
        let (sum, file) = line.split_once("  ")?;
        (file.trim() == name).then_some(sum.trim())
    })
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Raw document text after the checksum check.
pub fn fixture_text(fixture: Fixture) -> Result<&'static str, FixtureError> {
    let name = fixture.file_name();
    let (_, text) = FILES
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| FixtureError::Unknown(fixture.to_string()))?;
    match expected_sum(&name) {
        Some(sum) if sum == sha256_hex(text.as_bytes()) => Ok(text),
        _ => Err(FixtureError::Checksum(name)),
    }
}

/// Hermitises, rescales a trace within [`TRACE_SLACK`] of one, and clips
/// eigenvalues down to `−EIGEN_SLACK`.
pub fn condition(name: &str, m: &ComplexMatrix, split: Split) -> Result<DensityMatrix, FixtureError> {
    let corrupt = |reason: String| FixtureError::Corrupt {
        name: name.to_string(),
        reason,
    };
    if !m.is_square() || m.rows() != split.dim() {
        return Err(corrupt(format!("shape {}x{} does not fit split {}x{}", m.rows(), m.cols(), split.a, split.b)));
    }
    let h = m.hermitian_part();
    let tr = h.trace().re;
    if (tr - 1.0).abs() > TRACE_SLACK {
        return Err(corrupt(format!("trace {tr} is not within {TRACE_SLACK} of one")));
    }
    let mut h = h.scale(1.0 / tr);
    let eig = h.eigh();
    let min = eig.values[0];
    if min < -EIGEN_SLACK {
        return Err(corrupt(format!("eigenvalue {min} below -{EIGEN_SLACK}")));
    }
    if min < 0.0 {
        let clipped = ComplexMatrix::from_spectrum(&eig, |x| x.max(0.0));
        let t = clipped.trace().re;
        h = clipped.scale(1.0 / t);
    }
    DensityMatrix::new(h, Some(split)).map_err(|e| corrupt(e.to_string()))
}

pub fn load(fixture: Fixture) -> Result<DensityMatrix, FixtureError> {
    let name = fixture.to_string();
    let doc = MatrixDocument::from_json(fixture_text(fixture)?).map_err(|e| FixtureError::Corrupt {
        name: name.clone(),
        reason: e.to_string(),
    })?;
    let (m, split) = doc.to_matrix().map_err(|e| FixtureError::Corrupt {
        name: name.clone(),
        reason: e.to_string(),
    })?;
    condition(&name, &m, split)
}

/// One-based `row` of `table`.
pub fn load_fixture(table: Table, row: usize) -> Result<DensityMatrix, FixtureError> {
    if row == 0 || row > table.rows() {
        return Err(FixtureError::Unknown(format!("{table}:{row}")));
    }
    load(Fixture::Row(table, row))
}
