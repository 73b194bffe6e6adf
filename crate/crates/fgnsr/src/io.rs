//! File formats: CSV and binary matrices, instance metadata sidecars, and
//! cluster label files.
//!
//! CSV matrices have one line per row (band) with comma-separated decimal
//! values and an optional leading `# m n` size line; the writer always emits
//! it. Binary matrices start with the magic bytes `FGNM`, then `m` and `n` as
//! little-endian u64, then `m * n` little-endian f64 values in column-major
//! order, which round-trips bit-exactly. All indices in files are 0-based.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::matrix::DenseMatrix;
use crate::{Error, Result};

const BINARY_MAGIC: &[u8; 4] = b"FGNM";

/// On-disk matrix encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    Binary,
}

/// Serialize a matrix in the requested format.
pub fn write_matrix(m: &DenseMatrix, path: &Path, format: MatrixFormat) -> Result<()> {
    match format {
        MatrixFormat::Csv => write_matrix_csv(m, path),
        MatrixFormat::Binary => write_matrix_binary(m, path),
    }
}

pub fn write_matrix_csv(m: &DenseMatrix, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("# {} {}\n", m.rows(), m.cols()));
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!("{}", m.get(i, j)));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_matrix_binary(m: &DenseMatrix, path: &Path) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(BINARY_MAGIC)?;
    file.write_all(&(m.rows() as u64).to_le_bytes())?;
    file.write_all(&(m.cols() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(m.data().len() * 8);
    for v in m.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    file.write_all(&buf)?;
    Ok(())
}

/// Read a matrix, detecting the format from the leading magic bytes.
pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    let bytes = fs::read(path)?;
    if bytes.len() >= 4 && &bytes[..4] == BINARY_MAGIC {
        parse_binary(&bytes)
    } else {
        let text = String::from_utf8(bytes)
            .map_err(|_| Error::Parse("matrix file is neither binary nor UTF-8 text".into()))?;
        parse_csv(&text)
    }
}

fn parse_binary(bytes: &[u8]) -> Result<DenseMatrix> {
    if bytes.len() < 20 {
        return Err(Error::Parse("binary matrix file is truncated".into()));
    }
    let rows = u64::from_le_bytes(bytes[4..12].try_into().expect("8 bytes")) as usize;
    let cols = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
    let expected = rows
        .checked_mul(cols)
        .and_then(|e| e.checked_mul(8))
        .ok_or_else(|| Error::Parse("matrix dimensions overflow".into()))?;
    let payload = &bytes[20..];
    if payload.len() != expected {
        return Err(Error::Parse(format!(
            "binary payload holds {} bytes, header promises {expected}",
            payload.len()
        )));
    }
    let data: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    DenseMatrix::new(rows, cols, data)
}

fn parse_csv(text: &str) -> Result<DenseMatrix> {
    let mut declared: Option<(usize, usize)> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if lineno == 0 {
                let dims: Vec<&str> = rest.split_whitespace().collect();
                if dims.len() == 2 {
                    let r = dims[0].parse().map_err(|_| {
                        Error::Parse(format!("bad row count in size line: {}", dims[0]))
                    })?;
                    let c = dims[1].parse().map_err(|_| {
                        Error::Parse(format!("bad column count in size line: {}", dims[1]))
                    })?;
                    declared = Some((r, c));
                }
            }
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|field| {
                field.trim().parse::<f64>().map_err(|_| {
                    Error::Parse(format!("line {}: bad number {:?}", lineno + 1, field))
                })
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("matrix file holds no data rows".into()));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse("rows have inconsistent lengths".into()));
    }
    if let Some((dr, dc)) = declared {
        if dr != rows.len() || dc != cols {
            return Err(Error::Parse(format!(
                "size line says {dr}x{dc} but the data is {}x{cols}",
                rows.len()
            )));
        }
    }
    let mut m = DenseMatrix::zeros(rows.len(), cols);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Parse(format!("entry ({i}, {j}) is not finite")));
            }
            m.set(i, j, v);
        }
    }
    Ok(m)
}

/// Read a vector: a matrix file with a single row or a single column.
pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let m = read_matrix(path)?;
    if m.rows() == 1 {
        Ok(m.row(0))
    } else if m.cols() == 1 {
        Ok(m.col(0).to_vec())
    } else {
        Err(Error::Parse(format!(
            "expected a vector, found a {}x{} matrix",
            m.rows(),
            m.cols()
        )))
    }
}

/// Metadata sidecar describing a generated instance.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct InstanceMeta {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub eps: f64,
    pub alpha: f64,
    pub seed: u64,
    #[serde(rename = "K_true")]
    pub k_true: Vec<usize>,
}

pub fn write_meta(meta: &InstanceMeta, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(meta)
        .map_err(|e| Error::Parse(format!("cannot encode metadata: {e}")))?;
    fs::write(path, json + "\n")?;
    Ok(())
}

pub fn read_meta(path: &Path) -> Result<InstanceMeta> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("bad metadata file: {e}")))
}

/// Cluster labels: one id per line, line order matching column order.
pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path)?;
    let mut labels = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let id = line
            .parse::<usize>()
            .map_err(|_| Error::Parse(format!("line {}: bad cluster id {line:?}", lineno + 1)))?;
        labels.push(id);
    }
    if labels.is_empty() {
        return Err(Error::Parse("label file holds no labels".into()));
    }
    Ok(labels)
}
