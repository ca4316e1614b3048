//! FMF1 binary snapshots: magic `FMF1`, `u32` ds, `u32` d, `u64` rows,
//! `u64` cols, then row-major little-endian `f64` pairs `(re, im)`.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

pub const MAGIC: &[u8; 4] = b"FMF1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SnapshotHeader {
    pub ds: u32,
    pub d: u32,
    pub rows: u64,
    pub cols: u64,
}

pub fn write_fmf1(mut out: impl Write, ds: u32, d: u32, m: &CMatrix) -> Result<()> {
    let mut buf = Vec::with_capacity(28 + 16 * m.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&ds.to_le_bytes());
    buf.extend_from_slice(&d.to_le_bytes());
    buf.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    buf.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            buf.extend_from_slice(&m[(r, c)].re.to_le_bytes());
            buf.extend_from_slice(&m[(r, c)].im.to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

fn take<const N: usize>(bytes: &[u8], pos: &mut usize) -> Result<[u8; N]> {
    let chunk = bytes
        .get(*pos..*pos + N)
        .ok_or_else(|| Error::Format(format!("truncated snapshot at byte {}", *pos)))?;
    *pos += N;
    Ok(chunk.try_into().expect("length checked"))
}

pub fn read_fmf1(mut input: impl Read) -> Result<(SnapshotHeader, CMatrix)> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let mut pos = 0;
    if &take::<4>(&bytes, &mut pos)? != MAGIC {
        return Err(Error::Format("missing FMF1 magic".into()));
    }
    let header = SnapshotHeader {
        ds: u32::from_le_bytes(take(&bytes, &mut pos)?),
        d: u32::from_le_bytes(take(&bytes, &mut pos)?),
        rows: u64::from_le_bytes(take(&bytes, &mut pos)?),
        cols: u64::from_le_bytes(take(&bytes, &mut pos)?),
    };
    let count = header
        .rows
        .checked_mul(header.cols)
        .and_then(|n| n.checked_mul(16))
        .ok_or_else(|| Error::Format("snapshot dimensions overflow".into()))?;
    if bytes.len() - pos != count as usize {
        return Err(Error::Format(format!("expected {count} payload bytes, found {}", bytes.len() - pos)));
    }
    let (rows, cols) = (header.rows as usize, header.cols as usize);
    let mut m = CMatrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            let re = f64::from_le_bytes(take(&bytes, &mut pos)?);
            let im = f64::from_le_bytes(take(&bytes, &mut pos)?);
            m[(r, c)] = Complex64::new(re, im);
        }
    }
    Ok((header, m))
}

pub fn save_fmf1(path: &Path, ds: u32, d: u32, m: &CMatrix) -> Result<()> {
    write_fmf1(std::io::BufWriter::new(std::fs::File::create(path)?), ds, d, m)
}

pub fn load_fmf1(path: &Path) -> Result<(SnapshotHeader, CMatrix)> {
    read_fmf1(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Real data stored with zero imaginary parts.
pub fn real_to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}
