//! Contingency tables and Pearson's chi-square test of independence.

use serde::{Deserialize, Serialize};

use super::gamma::chi_square_sf;
use crate::error::{Error, Result};

/// Cochran's rule: expected counts below this trigger a warning.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    rows: Vec<String>,
    cols: Vec<String>,
    counts: Vec<Vec<u64>>,
}

impl ContingencyTable {
    pub fn new(rows: Vec<String>, cols: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        if rows.is_empty() || cols.is_empty() {
            return Err(Error::Input("contingency table needs at least one row and column".into()));
        }
        if counts.len() != rows.len() || counts.iter().any(|r| r.len() != cols.len()) {
            return Err(Error::Input(format!(
                "contingency table shape does not match {} × {} labels",
                rows.len(),
                cols.len()
            )));
        }
        Ok(ContingencyTable { rows, cols, counts })
    }

    /// From real-valued counts; anything that is not a non-negative integer is rejected.
    pub fn from_f64(rows: Vec<String>, cols: Vec<String>, counts: &[Vec<f64>]) -> Result<Self> {
        let mut out = Vec::with_capacity(counts.len());
        for (i, row) in counts.iter().enumerate() {
            let mut r = Vec::with_capacity(row.len());
            for (j, &v) in row.iter().enumerate() {
                if !(v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64) {
                    return Err(Error::Input(format!("cell ({i}, {j}) = {v} is not a count")));
                }
                r.push(v as u64);
            }
            out.push(r);
        }
        ContingencyTable::new(rows, cols, out)
    }

    /// Unlabelled table; rows and columns are numbered.
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let nr = counts.len();
        let nc = counts.first().map_or(0, Vec::len);
        ContingencyTable::new(
            (0..nr).map(|i| i.to_string()).collect(),
            (0..nc).map(|j| j.to_string()).collect(),
            counts,
        )
    }

    pub fn rows(&self) -> &[String] {
        &self.rows
    }

    pub fn cols(&self) -> &[String] {
        &self.cols
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.cols.len())
            .map(|j| self.counts.iter().map(|r| r[j]).sum())
            .collect()
    }

    pub fn df(&self) -> u64 {
        ((self.rows.len() - 1) * (self.cols.len() - 1)) as u64
    }

    pub fn transpose(&self) -> Self {
        let counts = (0..self.cols.len())
            .map(|j| self.counts.iter().map(|r| r[j]).collect())
            .collect();
        ContingencyTable {
            rows: self.cols.clone(),
            cols: self.rows.clone(),
            counts,
        }
    }

    /// Rows with a zero sum, by label.
    pub fn zero_rows(&self) -> Vec<&str> {
        self.row_sums()
            .iter()
            .zip(&self.rows)
            .filter(|(s, _)| **s == 0)
            .map(|(_, l)| l.as_str())
            .collect()
    }

    pub fn zero_cols(&self) -> Vec<&str> {
        self.col_sums()
            .iter()
            .zip(&self.cols)
            .filter(|(s, _)| **s == 0)
            .map(|(_, l)| l.as_str())
            .collect()
    }

    /// Comma-separated export with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row");
        for c in &self.cols {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (label, row) in self.rows.iter().zip(&self.counts) {
            out.push_str(label);
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub df: u64,
    pub n: u64,
    pub p_value: f64,
    /// Some expected count is below five.
    pub low_expected: bool,
}

/// Pearson's statistic without continuity correction.
pub fn chi_square(table: &ContingencyTable) -> Result<ChiSquareResult> {
    let zr = table.zero_rows();
    let zc = table.zero_cols();
    if !zr.is_empty() || !zc.is_empty() {
        let mut parts = Vec::new();
        if !zr.is_empty() {
            parts.push(format!("rows {}", zr.join(", ")));
        }
        if !zc.is_empty() {
            parts.push(format!("columns {}", zc.join(", ")));
        }
        return Err(Error::ZeroMarginal(parts.join("; ")));
    }
    if table.df() == 0 {
        return Err(Error::Input("chi-square test needs at least two rows and two columns".into()));
    }
    let n = table.total();
    let nf = n as f64;
    let rs = table.row_sums();
    let cs = table.col_sums();
    let mut stat = 0.0;
    let mut low = false;
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &o) in row.iter().enumerate() {
            let e = rs[i] as f64 * cs[j] as f64 / nf;
            if e < MIN_EXPECTED {
                low = true;
            }
            let d = o as f64 - e;
            stat += d * d / e;
        }
    }
    let df = table.df();
    Ok(ChiSquareResult {
        statistic: stat,
        df,
        n,
        p_value: chi_square_sf(stat, df)?,
        low_expected: low,
    })
}

/// APA-style p-value: three decimals, or "< .001".
pub fn format_p(p: f64) -> String {
    if p < 0.001 {
        "< .001".to_string()
    } else {
        let s = format!("{p:.3}");
        match s.strip_prefix('0') {
            Some(rest) => rest.to_string(),
            None => s,
        }
    }
}
