//! Matrix files: `{"shape":[rows,cols],"rows":[[...],...]}` or plain CSV.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub shape: [usize; 2],
    pub rows: Vec<Vec<f64>>,
}

impl MatrixFile {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        Self {
            shape: [m.nrows(), m.ncols()],
            rows: m.row_iter().map(|r| r.iter().copied().collect()).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        let [rows, cols] = self.shape;
        if self.rows.len() != rows {
            return Err(Error::Parse(format!(
                "shape says {rows} rows, found {}",
                self.rows.len()
            )));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::Parse(format!(
                    "row {i} has {} values, expected {cols}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Parse(format!("row {i} has a non-finite value")));
            }
        }
        Ok(DMatrix::from_fn(rows, cols, |i, j| self.rows[i][j]))
    }
}

pub fn parse_json(text: &str) -> Result<DMatrix<f64>> {
    let file: MatrixFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.to_matrix()
}

/// `n` lines of comma-separated values; blank lines are ignored.
pub fn parse_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|cell| {
                cell.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    MatrixFile {
        shape: [rows.len(), cols],
        rows,
    }
    .to_matrix()
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Reads a matrix, choosing the format from the file extension.
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    if is_csv(path) {
        parse_csv(&text)
    } else {
        parse_json(&text)
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_json(m: &DMatrix<f64>) -> String {
    let mut s = format!("{{\"shape\":[{},{}],\"rows\":[", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        if i > 0 {
            s.push(',');
        }
        s.push('[');
        for j in 0..m.ncols() {
            if j > 0 {
                s.push(',');
            }
            s.push_str(&format_value(m[(i, j)]));
        }
        s.push(']');
    }
    s.push_str("]}\n");
    s
}

pub fn to_csv(m: &DMatrix<f64>) -> String {
    let mut s = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                s.push(',');
            }
            let _ = write!(s, "{}", format_value(m[(i, j)]));
        }
        s.push('\n');
    }
    s
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let text = if is_csv(path) { to_csv(m) } else { to_json(m) };
    fs::write(path, text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}
