//! Binary model file.
//!
//! Layout, all integers and floats little-endian:
//!
//! | offset | size | field                                  |
//! |--------|------|----------------------------------------|
//! | 0      | 4    | magic `b"MTTM"`                        |
//! | 4      | 4    | format version, `u32` = 1              |
//! | 8      | 56   | `u64` × 7: m, n, q, s, k1, k2, seed    |
//! | 64     | ...  | `f64` matrices, row-major, in order:   |
//! |        |      | D₁ (m×k1), C₁ (k1×n), D₂ (m×k2),       |
//! |        |      | C₂ (k2×q), V (q×s), G (s×s), Z (q×s)   |

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matops::Matrix;
use crate::solver::MttModel;
use crate::transforms::FactorPair;

pub const MAGIC: &[u8; 4] = b"MTTM";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 7 * 8;

fn put_matrix(out: &mut Vec<u8>, m: &Matrix) {
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.extend_from_slice(&m[(r, c)].to_le_bytes());
        }
    }
}

pub fn encode(model: &MttModel) -> Vec<u8> {
    let dims = [
        model.m(),
        model.n(),
        model.q(),
        model.s(),
        model.k1(),
        model.k2(),
    ];
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for d in dims {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    out.extend_from_slice(&model.seed.to_le_bytes());
    for m in [
        &model.first.d,
        &model.first.c,
        &model.second.d,
        &model.second.c,
        &model.v,
        &model.g,
        &model.z,
    ] {
        put_matrix(&mut out, m);
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format("model file truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<Matrix> {
        let len = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| Error::Format("model dimensions overflow".into()))?;
        let raw = self.take(len)?;
        let data: Vec<f64> = raw
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
        let m = Matrix::from_row_slice(rows, cols, &data);
        crate::matops::ensure_finite(&m)?;
        Ok(m)
    }
}

pub fn decode(bytes: &[u8]) -> Result<MttModel> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(Error::Format("not a model file (bad magic)".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::Format(format!("unsupported model version {version}")));
    }
    let mut r = Reader { bytes, pos: 8 };
    let mut dims = [0usize; 6];
    for d in dims.iter_mut() {
        *d = usize::try_from(r.u64()?)
            .map_err(|_| Error::Format("dimension does not fit in memory".into()))?;
    }
    let [m, n, q, s, k1, k2] = dims;
    if dims.contains(&0) {
        return Err(Error::Format(format!("zero dimension in header {dims:?}")));
    }
    let seed = r.u64()?;
    let first = FactorPair {
        d: r.matrix(m, k1)?,
        c: r.matrix(k1, n)?,
    };
    let second = FactorPair {
        d: r.matrix(m, k2)?,
        c: r.matrix(k2, q)?,
    };
    let v = r.matrix(q, s)?;
    let g = r.matrix(s, s)?;
    let z = r.matrix(q, s)?;
    if r.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after model payload",
            bytes.len() - r.pos
        )));
    }
    Ok(MttModel {
        first,
        second,
        v,
        g,
        z,
        seed,
    })
}

pub fn write_model(path: &Path, model: &MttModel) -> Result<()> {
    fs::write(path, encode(model))?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<MttModel> {
    decode(&fs::read(path)?)
}
