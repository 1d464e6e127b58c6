//! Matrix Market reader and writer for dense real matrices.
//!
//! Reads both the `array` layout (column-major, one value per line) and the
//! `coordinate` layout (1-based `i j value` triples); `real` and `integer`
//! fields, `general` and `symmetric` symmetry. Values are written with 17
//! significant digits so that a write followed by a read is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Array,
    Coordinate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

fn malformed(line: usize, msg: impl Into<String>) -> Error {
    Error::MatrixMarket {
        line,
        msg: msg.into(),
    }
}

pub fn read_path(path: impl AsRef<Path>) -> Result<Matrix> {
    let text = fs::read_to_string(path)?;
    parse(&text)
}

pub fn write_path(path: impl AsRef<Path>, m: &Matrix, layout: Layout) -> Result<()> {
    fs::write(path, format(m, layout))?;
    Ok(())
}

pub fn parse(text: &str) -> Result<Matrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (hline, header) = lines.next().ok_or_else(|| malformed(1, "empty input"))?;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(malformed(hline, "expected '%%MatrixMarket matrix <layout> <field> <symmetry>'"));
    }
    let layout = match tokens[2].as_str() {
        "array" => Layout::Array,
        "coordinate" => Layout::Coordinate,
        other => return Err(malformed(hline, format!("unsupported layout '{other}'"))),
    };
    match tokens[3].as_str() {
        "real" | "integer" | "double" => {}
        other => return Err(malformed(hline, format!("unsupported field '{other}'"))),
    }
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(malformed(hline, format!("unsupported symmetry '{other}'"))),
    };

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });

    let (sline, size) = body.next().ok_or_else(|| malformed(hline, "missing size line"))?;
    let dims = parse_usizes(sline, size)?;
    let (rows, cols) = match (layout, dims.as_slice()) {
        (Layout::Array, [r, c]) | (Layout::Coordinate, [r, c, _]) => (*r, *c),
        _ => return Err(malformed(sline, "wrong number of size fields")),
    };
    if rows == 0 || cols == 0 {
        return Err(malformed(sline, "matrix dimensions must be positive"));
    }
    if symmetry == Symmetry::Symmetric && rows != cols {
        return Err(malformed(sline, "symmetric matrix must be square"));
    }

    let mut m = Matrix::zeros(rows, cols);
    match layout {
        Layout::Array => {
            // column-major; symmetric stores the lower triangle only
            let mut slots = Vec::new();
            for j in 0..cols {
                let start = if symmetry == Symmetry::Symmetric { j } else { 0 };
                for i in start..rows {
                    slots.push((i, j));
                }
            }
            let mut filled = 0;
            for (ln, l) in body {
                let mut fields = l.split_whitespace();
                let v = parse_value(ln, fields.next().unwrap_or(""))?;
                if fields.next().is_some() {
                    return Err(malformed(ln, "array entries hold one value per line"));
                }
                let &(i, j) = slots
                    .get(filled)
                    .ok_or_else(|| malformed(ln, "more entries than the declared size"))?;
                m[(i, j)] = v;
                if symmetry == Symmetry::Symmetric {
                    m[(j, i)] = v;
                }
                filled += 1;
            }
            if filled != slots.len() {
                return Err(malformed(sline, format!("expected {} entries, found {filled}", slots.len())));
            }
        }
        Layout::Coordinate => {
            let nnz = dims[2];
            let mut seen = 0;
            for (ln, l) in body {
                let f: Vec<&str> = l.split_whitespace().collect();
                if f.len() != 3 {
                    return Err(malformed(ln, "coordinate entries need 'row col value'"));
                }
                let i: usize = f[0].parse().map_err(|_| malformed(ln, "bad row index"))?;
                let j: usize = f[1].parse().map_err(|_| malformed(ln, "bad column index"))?;
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(malformed(ln, format!("index ({i}, {j}) out of range")));
                }
                let v = parse_value(ln, f[2])?;
                m[(i - 1, j - 1)] += v;
                if symmetry == Symmetry::Symmetric && i != j {
                    m[(j - 1, i - 1)] += v;
                }
                seen += 1;
            }
            if seen != nnz {
                return Err(malformed(sline, format!("declared {nnz} entries, found {seen}")));
            }
        }
    }
    m.ensure_finite()?;
    Ok(m)
}

fn parse_usizes(line: usize, s: &str) -> Result<Vec<usize>> {
    s.split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| malformed(line, format!("bad size field '{t}'"))))
        .collect()
}

fn parse_value(line: usize, s: &str) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| malformed(line, format!("bad value '{s}'")))?;
    if !v.is_finite() {
        return Err(malformed(line, "non-finite value"));
    }
    Ok(v)
}

pub fn format(m: &Matrix, layout: Layout) -> String {
    let mut out = String::new();
    match layout {
        Layout::Array => {
            out.push_str("%%MatrixMarket matrix array real general\n");
            let _ = writeln!(out, "{} {}", m.rows(), m.cols());
            for j in 0..m.cols() {
                for i in 0..m.rows() {
                    let _ = writeln!(out, "{:.16e}", m[(i, j)]);
                }
            }
        }
        Layout::Coordinate => {
            out.push_str("%%MatrixMarket matrix coordinate real general\n");
            let nnz = m.as_slice().iter().filter(|&&v| v != 0.0).count();
            let _ = writeln!(out, "{} {} {nnz}", m.rows(), m.cols());
            for i in 0..m.rows() {
                for j in 0..m.cols() {
                    let v = m[(i, j)];
                    if v != 0.0 {
                        let _ = writeln!(out, "{} {} {:.16e}", i + 1, j + 1, v);
                    }
                }
            }
        }
    }
    out
}
