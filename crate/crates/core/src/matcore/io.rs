//! Matrix files: CSV (one row per line) and the `CPAM` binary layout
//! (4-byte magic, u32 rows, u32 cols, row-major little-endian f64 payload).

use std::fs;
use std::io::Write;
use std::path::Path;

use super::dense::DenseMat;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"CPAM";
const HEADER_LEN: usize = 12;

pub fn to_csv(m: &DenseMat) -> String {
    let mut out = String::with_capacity(m.rows() * m.cols() * 12);
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn from_csv(text: &str) -> Result<DenseMat> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| {
                f.trim().parse::<f64>().map_err(|e| {
                    Error::Parse(format!("line {}: {:?}: {e}", lineno + 1, f.trim()))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("no matrix rows found".into()));
    }
    if rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(Error::Parse("rows have differing lengths".into()));
    }
    DenseMat::from_rows(&rows)
}

pub fn to_binary(m: &DenseMat) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * m.as_slice().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn from_binary(bytes: &[u8]) -> Result<DenseMat> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(Error::Parse("missing CPAM header".into()));
    }
    let word = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let (rows, cols) = (word(4), word(8));
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != rows * cols * 8 {
        return Err(Error::Parse(format!(
            "payload is {} bytes, expected {} for {rows}x{cols}",
            payload.len(),
            rows * cols * 8
        )));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    DenseMat::from_vec(rows, cols, data)
}

fn is_binary(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("cpam" | "bin")
    )
}

/// Reads `.cpam`/`.bin` as binary and anything else as CSV.
pub fn read_matrix(path: &Path) -> Result<DenseMat> {
    if is_binary(path) {
        from_binary(&fs::read(path)?)
    } else {
        from_csv(&fs::read_to_string(path)?)
    }
}

pub fn write_matrix(path: &Path, m: &DenseMat) -> Result<()> {
    let mut f = fs::File::create(path)?;
    if is_binary(path) {
        f.write_all(&to_binary(m))?;
    } else {
        f.write_all(to_csv(m).as_bytes())?;
    }
    Ok(())
}
