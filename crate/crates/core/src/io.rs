//! Deterministic text output: float formatting, CSV tables and matrix CSV.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMat;

/// Shortest representation that parses back to the same `f64`
/// (at most 17 significant digits). Plain notation for 1e-4 ≤ |x| < 1e16,
/// exponent notation otherwise.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e16).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// One table cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    pub fn to_csv(&self) -> String {
        match self {
            Cell::Num(v) => fmt_f64(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Cell::Num(v) => serde_json::json!(v),
            Cell::Int(v) => serde_json::json!(v),
            Cell::Text(s) => serde_json::json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
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

/// A table whose column names carry their units.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_f64(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&v| Cell::Num(v)).collect());
    }

    /// CSV text; each line of `preamble` becomes a leading `# ` comment.
    pub fn to_csv(&self, preamble: &[String]) -> String {
        let mut s = String::new();
        for line in preamble {
            s.push_str("# ");
            s.push_str(line);
            s.push('\n');
        }
        s.push_str(&self.header.join(","));
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(Cell::to_csv).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    /// Column-oriented JSON object.
    pub fn to_json(&self) -> serde_json::Value {
        let mut obj = serde_json::Map::new();
        for (j, name) in self.header.iter().enumerate() {
            let col: Vec<serde_json::Value> = self.rows.iter().map(|r| r[j].to_json()).collect();
            obj.insert(name.clone(), serde_json::Value::Array(col));
        }
        serde_json::Value::Object(obj)
    }
}

/// Row-major matrix CSV; every cell is written as a `re,im` pair.
pub fn matrix_to_csv(m: &CMat) -> String {
    let mut s = String::new();
    for i in 0..m.nrows() {
        let cells: Vec<String> = (0..m.ncols())
            .map(|j| format!("{},{}", fmt_f64(m[(i, j)].re), fmt_f64(m[(i, j)].im)))
            .collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// Inverse of [`matrix_to_csv`]; blank lines and `#` comments are skipped.
pub fn matrix_from_csv(text: &str) -> Result<CMat> {
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|c| {
                c.trim().parse::<f64>().map_err(|e| {
                    Error::InvalidArgument(format!("matrix CSV line {}: {e}", ln + 1))
                })
            })
            .collect::<Result<_>>()?;
        if !vals.len().is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "matrix CSV line {}: odd number of values",
                ln + 1
            )));
        }
        rows.push(vals.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect());
    }
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if n == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(Error::InvalidArgument("matrix CSV rows are empty or ragged".into()));
    }
    Ok(CMat::from_fn(n, m, |i, j| rows[i][j]))
}
