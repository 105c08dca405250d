//! File formats: dense CSV matrices, 1-based coordinate masks and number
//! formatting for terminal output.

use std::io::{Read, Write};

use nalgebra::DMatrix;

use crate::error::{LrinError, Result};

/// Parse a dense matrix: one row per line, comma separated, no header.
/// Blank lines are skipped; all rows must have the same length.
pub fn read_matrix_csv<R: Read>(reader: R) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| LrinError::Parse(format!("csv: {e}")))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(col, cell)| {
                cell.parse::<f64>().map_err(|_| {
                    LrinError::Parse(format!(
                        "row {}, column {}: '{cell}' is not a number",
                        line + 1,
                        col + 1
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(LrinError::Parse(format!(
                    "row {} has {} columns, expected {}",
                    line + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() || rows[0].is_empty() {
        return Err(LrinError::Empty);
    }
    let (n, m) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

/// Write a dense matrix with 17 significant digits, which round-trips
/// every finite `f64` exactly.
pub fn write_matrix_csv<W: Write>(mut w: W, x: &DMatrix<f64>) -> Result<()> {
    let mut line = String::new();
    for i in 0..x.nrows() {
        line.clear();
        for j in 0..x.ncols() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format!("{:.16e}", x[(i, j)]));
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Parse a coordinate mask: one `i j` pair per line, 1-based. Lines starting
/// with `%` or `#` are comments. Returns zero-based pairs in file order.
pub fn read_mask<R: Read>(mut reader: R) -> Result<Vec<(usize, usize)>> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') || line.starts_with('#') {
            continue;
        }
        let bad = || LrinError::Parse(format!("mask line {}: expected 'i j', got '{line}'", k + 1));
        let mut it = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty());
        let i: usize = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let j: usize = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        if it.next().is_some() || i == 0 || j == 0 {
            return Err(bad());
        }
        out.push((i - 1, j - 1));
    }
    Ok(out)
}

pub fn write_mask<W: Write>(mut w: W, mask: &[(usize, usize)]) -> Result<()> {
    for &(i, j) in mask {
        writeln!(w, "{} {}", i + 1, j + 1)?;
    }
    w.flush()?;
    Ok(())
}

/// Decimal rendering with 16 significant digits (`2.828427124746190`);
/// exactly `0` for zero and scientific notation outside `[1e-5, 1e15)`.
pub fn format_value(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let mag = v.abs();
    if !(1e-5..1e15).contains(&mag) {
        return format!("{v:.15e}");
    }
    let exp = mag.log10().floor() as i32;
    let decimals = (15 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}
