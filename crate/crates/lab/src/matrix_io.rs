//! Plain-text matrix files.
//!
//! Lines starting with `#` are comments. The first other line holds
//! `rows cols`; the entries follow in row-major order, separated by any
//! whitespace. Writers put one matrix row per line and print every entry in
//! shortest round-trip form, so a write/read cycle is lossless.

use std::fmt::Write as _;
use std::path::Path;

use leverage::Matrix;

use crate::error::{LabError, Result};

pub fn to_text(a: &Matrix) -> String {
    let mut out = format!("{} {}\n", a.rows(), a.cols());
    for i in 0..a.rows() {
        let line: Vec<String> = (0..a.cols()).map(|j| format!("{:e}", a[(i, j)])).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

pub fn from_text(text: &str) -> Result<Matrix> {
    let mut tokens = text
        .lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .flat_map(str::split_whitespace);
    let mut dim = |name: &str| -> Result<usize> {
        let tok = tokens
            .next()
            .ok_or_else(|| LabError::Parse(format!("missing {name} in matrix header")))?;
        tok.parse()
            .map_err(|_| LabError::Parse(format!("bad {name} '{tok}' in matrix header")))
    };
    let rows = dim("row count")?;
    let cols = dim("column count")?;
    let data = tokens
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| LabError::Parse(format!("bad matrix entry '{t}'")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if data.len() != rows * cols {
        return Err(LabError::Parse(format!(
            "header says {rows}x{cols} but found {} entries",
            data.len()
        )));
    }
    Ok(Matrix::from_row_slice(rows, cols, &data)?)
}

pub fn write_matrix(path: &Path, a: &Matrix) -> Result<()> {
    std::fs::write(path, to_text(a)).map_err(|e| LabError::io(path, e))
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    from_text(&text)
}
