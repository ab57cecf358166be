//! Sentence-embedding matrices produced outside this crate.
//!
//! Text layout: a `n_rows n_cols` header line followed by `n_rows` lines of
//! `n_cols` whitespace-separated decimals. Binary layout: two little-endian
//! `u64` (rows, cols) followed by `rows · cols` little-endian `f32`,
//! row-major. Row `i` belongs to the `i`-th id of the companion id file.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use super::{ClusterError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingFormat {
    Text,
    Binary,
}

impl EmbeddingFormat {
    /// `.bin` selects the binary layout; everything else is text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("bin") => EmbeddingFormat::Binary,
            _ => EmbeddingFormat::Text,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub values: DMatrix<f64>,
}

impl EmbeddingMatrix {
    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> ClusterError {
    ClusterError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn parse_header(line: &str, lineno: usize) -> Result<(usize, usize)> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    let parse = |s: &str| {
        s.parse::<usize>().map_err(|e| ClusterError::Parse {
            line: lineno,
            message: format!("bad header field `{s}`: {e}"),
        })
    };
    match fields.as_slice() {
        [r, c] => Ok((parse(r)?, parse(c)?)),
        _ => Err(ClusterError::Parse {
            line: lineno,
            message: "header must be `n_rows n_cols`".into(),
        }),
    }
}

fn parse_text(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or(ClusterError::Parse {
        line: 1,
        message: "missing header".into(),
    })?;
    let (rows, cols) = parse_header(header, hline + 1)?;

    let mut values = Vec::with_capacity(rows * cols);
    let mut seen_rows = 0;
    for (i, line) in lines {
        let before = values.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| ClusterError::Parse {
                line: i + 1,
                message: format!("not a number: `{tok}`"),
            })?;
            values.push(v);
        }
        let width = values.len() - before;
        if width != cols {
            return Err(ClusterError::ShapeMismatch(format!(
                "line {} has {width} values, header declares {cols} columns",
                i + 1
            )));
        }
        seen_rows += 1;
    }
    if seen_rows != rows {
        return Err(ClusterError::ShapeMismatch(format!(
            "header declares {rows}×{cols} but payload has {} values",
            values.len()
        )));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

fn parse_binary(bytes: &[u8]) -> Result<DMatrix<f64>> {
    if bytes.len() < 16 {
        return Err(ClusterError::ShapeMismatch(format!(
            "binary file has {} bytes, header needs 16",
            bytes.len()
        )));
    }
    let rows = u64::from_le_bytes(bytes[0..8].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let payload = &bytes[16..];
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| ClusterError::ShapeMismatch(format!("{rows}×{cols} overflows")))?;
    if payload.len() != expected {
        return Err(ClusterError::ShapeMismatch(format!(
            "header declares {rows}×{cols} ({expected} bytes) but payload has {} bytes",
            payload.len()
        )));
    }
    let values: Vec<f64> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

pub fn load_embeddings(path: &Path, format: EmbeddingFormat) -> Result<EmbeddingMatrix> {
    let values = match format {
        EmbeddingFormat::Text => {
            let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            parse_text(&text)?
        }
        EmbeddingFormat::Binary => {
            let bytes = std::fs::read(path).map_err(|e| io_error(path, e))?;
            parse_binary(&bytes)?
        }
    };
    super::check_finite(&values)?;
    Ok(EmbeddingMatrix { values })
}

/// One id per non-empty line.
pub fn load_ids(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect())
}

pub fn write_embeddings_text<W: Write>(m: &DMatrix<f64>, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{} {}", m.nrows(), m.ncols())?;
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn write_embeddings_binary<W: Write>(m: &DMatrix<f64>, mut out: W) -> std::io::Result<()> {
    out.write_all(&(m.nrows() as u64).to_le_bytes())?;
    out.write_all(&(m.ncols() as u64).to_le_bytes())?;
    for row in m.row_iter() {
        for v in row.iter() {
            out.write_all(&(*v as f32).to_le_bytes())?;
        }
    }
    Ok(())
}
