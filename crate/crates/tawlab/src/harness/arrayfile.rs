//! `TAWF` binary array files: magic "TAWF", version u32 = 1, dtype u8
//! (1 = float64), ndim u8, dims as u64 each, then the row-major
//! little-endian float64 payload. Round trips are bit-identical.

use crate::error::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"TAWF";
const VERSION: u32 = 1;
const DTYPE_F64: u8 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct ArrayFile {
    pub dims: Vec<u64>,
    pub data: Vec<f64>,
}

impl ArrayFile {
    pub fn new(dims: Vec<u64>, data: Vec<f64>) -> Result<Self> {
        let expect: u64 = dims.iter().product();
        if expect != data.len() as u64 {
            return Err(Error::ArrayFile(format!(
                "payload length {} does not match dims {:?}",
                data.len(),
                dims
            )));
        }
        Ok(ArrayFile { dims, data })
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        ArrayFile::new(vec![rows as u64, cols as u64], data)
    }

    pub fn scalar(v: f64) -> Self {
        ArrayFile { dims: vec![], data: vec![v] }
    }
}

pub fn write_array(path: &Path, arr: &ArrayFile) -> Result<()> {
    let mut buf = Vec::with_capacity(16 + arr.dims.len() * 8 + arr.data.len() * 8);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.push(DTYPE_F64);
    buf.push(arr.dims.len() as u8);
    for d in &arr.dims {
        buf.extend_from_slice(&d.to_le_bytes());
    }
    for v in &arr.data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

pub fn read_array(path: &Path) -> Result<ArrayFile> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let fail = |msg: &str| Error::ArrayFile(format!("{}: {msg}", path.display()));
    if bytes.len() < 10 {
        return Err(fail("truncated header"));
    }
    if &bytes[0..4] != MAGIC {
        return Err(fail("bad magic"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(fail(&format!("unsupported version {version}")));
    }
    if bytes[8] != DTYPE_F64 {
        return Err(fail(&format!("unsupported dtype {}", bytes[8])));
    }
    let ndim = bytes[9] as usize;
    let mut off = 10;
    if bytes.len() < off + 8 * ndim {
        return Err(fail("truncated dims"));
    }
    let mut dims = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        dims.push(u64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()));
        off += 8;
    }
    let count: u64 = dims.iter().product::<u64>().max(if ndim == 0 { 1 } else { 0 });
    // 0-dim scalars carry exactly one value
    let expect = if ndim == 0 { 1 } else { dims.iter().product::<u64>() } as usize;
    let _ = count;
    if bytes.len() != off + 8 * expect {
        return Err(fail(&format!(
            "truncated payload: have {} bytes, expected {}",
            bytes.len() - off,
            8 * expect
        )));
    }
    let mut data = Vec::with_capacity(expect);
    for k in 0..expect {
        let p = off + 8 * k;
        data.push(f64::from_le_bytes(bytes[p..p + 8].try_into().unwrap()));
    }
    Ok(ArrayFile { dims, data })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("tawf-tests");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn identity_matrix_round_trips_bit_exactly() {
        let arr = ArrayFile::matrix(3, 3, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0])
            .unwrap();
        let p = tmp("id3.tawf");
        write_array(&p, &arr).unwrap();
        let back = read_array(&p).unwrap();
        assert_eq!(arr, back);
        // byte identity across writes
        write_array(&tmp("id3b.tawf"), &back).unwrap();
        let a = std::fs::read(&p).unwrap();
        let b = std::fs::read(tmp("id3b.tawf")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_dim_scalar_round_trips() {
        let arr = ArrayFile::scalar(std::f64::consts::PI);
        let p = tmp("scalar.tawf");
        write_array(&p, &arr).unwrap();
        let back = read_array(&p).unwrap();
        assert_eq!(back.dims.len(), 0);
        assert_eq!(back.data, vec![std::f64::consts::PI]);
    }

    #[test]
    fn truncated_and_corrupt_files_are_rejected() {
        let arr = ArrayFile::matrix(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let p = tmp("trunc.tawf");
        write_array(&p, &arr).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() - 5]).unwrap();
        match read_array(&p) {
            Err(Error::ArrayFile(msg)) => assert!(msg.contains("truncated")),
            other => panic!("expected truncation error, got {other:?}"),
        }
        let mut bad = bytes.clone();
        bad[0] = b'X';
        std::fs::write(&p, &bad).unwrap();
        match read_array(&p) {
            Err(Error::ArrayFile(msg)) => assert!(msg.contains("magic")),
            other => panic!("expected magic error, got {other:?}"),
        }
        // dims/payload mismatch at construction
        assert!(ArrayFile::matrix(2, 3, vec![0.0; 5]).is_err());
    }
}
