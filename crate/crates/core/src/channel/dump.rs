//! Raw matrix files: little-endian `f64`, row-major, `re, im` interleaved.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::CMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixEntry {
    /// `H0`, `G0`, ..., `D`.
    pub name: String,
    /// File name relative to the manifest.
    pub file: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpRealization {
    pub realization: u64,
    pub matrices: Vec<MatrixEntry>,
}

/// `manifest.json` next to the matrix files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpManifest {
    pub config_hash: String,
    pub seed: u64,
    pub realizations: Vec<DumpRealization>,
}

impl DumpManifest {
    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Malformed {
            path: path.clone(),
            reason: e.to_string(),
        })?;
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join("manifest.json");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Malformed {
            path,
            reason: e.to_string(),
        })
    }
}

pub fn write_matrix(path: &Path, m: &CMatrix) -> Result<()> {
    let mut bytes = Vec::with_capacity(m.len() * 16);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m[(i, j)];
            bytes.extend_from_slice(&v.re.to_le_bytes());
            bytes.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_matrix(path: &Path, rows: usize, cols: usize) -> Result<CMatrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != rows * cols * 16 {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            reason: format!(
                "expected {} bytes for {rows}x{cols}, found {}",
                rows * cols * 16,
                bytes.len()
            ),
        });
    }
    let mut vals = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")));
    let mut next = || Complex64::new(vals.next().unwrap(), vals.next().unwrap());
    let row_major: Vec<Complex64> = (0..rows * cols).map(|_| next()).collect();
    Ok(CMatrix::from_row_slice(rows, cols, &row_major))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let m = CMatrix::from_fn(3, 2, |i, j| {
            Complex64::new(0.1 * i as f64 - 1e-300, std::f64::consts::PI * j as f64)
        });
        let p = dir.path().join("m.bin");
        write_matrix(&p, &m).unwrap();
        assert_eq!(fs::metadata(&p).unwrap().len(), 96);
        let back = read_matrix(&p, 3, 2).unwrap();
        for (a, b) in m.iter().zip(back.iter()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn layout_is_row_major_interleaved() {
        let dir = tempfile::tempdir().unwrap();
        let m = CMatrix::from_row_slice(1, 2, &[Complex64::new(1.0, 2.0), Complex64::new(3.0, 4.0)]);
        let p = dir.path().join("m.bin");
        write_matrix(&p, &m).unwrap();
        let raw = fs::read(&p).unwrap();
        let vals: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        assert_eq!(vals, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn wrong_size_is_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        fs::write(&p, [0u8; 20]).unwrap();
        assert!(matches!(read_matrix(&p, 1, 1), Err(Error::Malformed { .. })));
    }
}
