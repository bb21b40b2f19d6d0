//! Little-endian header fields and `f32` blocks shared by the model files.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub(crate) fn write_magic(w: &mut impl Write, magic: &[u8; 4]) -> std::io::Result<()> {
    w.write_all(magic)
}

pub(crate) fn read_magic(r: &mut impl Read, expected: &[u8; 4]) -> Result<()> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(truncated)?;
    if &buf != expected {
        return Err(Error::Format(format!(
            "bad magic bytes {:?}, expected {:?}",
            String::from_utf8_lossy(&buf),
            String::from_utf8_lossy(expected)
        )));
    }
    Ok(())
}

pub(crate) fn write_u32(w: &mut impl Write, v: usize) -> std::io::Result<()> {
    let v = u32::try_from(v).map_err(|_| std::io::Error::other("header field exceeds u32"))?;
    w.write_all(&v.to_le_bytes())
}

pub(crate) fn read_u32(r: &mut impl Read) -> Result<usize> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(truncated)?;
    Ok(u32::from_le_bytes(buf) as usize)
}

pub(crate) fn write_f32s(w: &mut impl Write, values: &[f64]) -> std::io::Result<()> {
    let mut bytes = Vec::with_capacity(values.len() * 4);
    for &v in values {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    w.write_all(&bytes)
}

/// Reads exactly `n` values. The buffer grows with the data actually read,
/// so a corrupt count cannot force a huge allocation.
pub(crate) fn read_f32s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let len = n.checked_mul(4).ok_or_else(|| Error::Format("block size overflows".into()))?;
    let mut bytes = Vec::new();
    r.take(len as u64).read_to_end(&mut bytes).map_err(truncated)?;
    if bytes.len() != len {
        return Err(Error::Format(format!("truncated model file: expected {len} bytes of values, found {}", bytes.len())));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

pub(crate) fn read_matrix(r: &mut impl Read, rows: usize, cols: usize) -> Result<Matrix> {
    let n = rows.checked_mul(cols).ok_or_else(|| Error::Format("matrix size overflows".into()))?;
    let data = read_f32s(r, n)?;
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Format("model file contains non-finite parameters".into()));
    }
    Ok(Matrix::from_vec(rows, cols, data))
}

pub(crate) fn expect_eof(r: &mut impl Read) -> Result<()> {
    let mut probe = [0u8; 1];
    match r.read(&mut probe) {
        Ok(0) => Ok(()),
        Ok(_) => Err(Error::Format("trailing bytes after model data".into())),
        Err(e) => Err(Error::Format(format!("read error: {e}"))),
    }
}

fn truncated(e: std::io::Error) -> Error {
    Error::Format(format!("truncated model file: {e}"))
}

pub(crate) fn save_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}
